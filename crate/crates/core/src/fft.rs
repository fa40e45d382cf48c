//! Thin wrappers around rustfft for the fixed-size transforms used by the
//! spectral derivative and the time integrator.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Forward/inverse FFT pair of a fixed length. Inverse is normalized by 1/n.
pub struct FftPair {
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
    n: usize,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            n,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let scale = 1.0 / self.n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Angular wavenumbers of an n-point periodic grid with spacing dx,
/// in FFT ordering (0, 1, .., n/2, -n/2+1, .., -1) * 2*pi/(n*dx).
pub fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * dx);
    (0..n)
        .map(|i| {
            let j = if i <= n / 2 { i as i64 } else { i as i64 - n as i64 };
            j as f64 * dk
        })
        .collect()
}

/// Cumulative integral int_{x_0}^{x} f of real samples on a uniform grid,
/// spectrally accurate for data whose fluctuation is band-limited: the
/// mean integrates to a linear ramp, the rest through division by i k.
pub fn cumulative_integral(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    let fft = FftPair::new(n);
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    let mean = buf[0].re / n as f64;
    let ks = wavenumbers(n, dx);
    buf[0] = Complex64::new(0.0, 0.0);
    for (v, &k) in buf.iter_mut().zip(&ks).skip(1) {
        *v /= Complex64::new(0.0, k);
    }
    if n % 2 == 0 {
        buf[n / 2] = Complex64::new(0.0, 0.0);
    }
    fft.inverse(&mut buf);
    let f0 = buf[0].re;
    (0..n)
        .map(|i| mean * (i as f64) * dx + buf[i].re - f0)
        .collect()
}

/// Spectral derivative of samples on a uniform grid treated as periodic.
/// The Nyquist mode is zeroed so the derivative of real data stays real.
pub fn spectral_derivative(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let fft = FftPair::new(n);
    let ks = wavenumbers(n, dx);
    let mut buf = values.to_vec();
    fft.forward(&mut buf);
    for (v, &k) in buf.iter_mut().zip(&ks) {
        *v *= Complex64::new(0.0, k);
    }
    if n % 2 == 0 {
        buf[n / 2] = Complex64::new(0.0, 0.0);
    }
    fft.inverse(&mut buf);
    buf
}

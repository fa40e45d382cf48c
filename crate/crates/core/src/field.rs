//! Spatial grids, sampled complex fields, the spectral cross contour and the
//! discretized norms shared by every other module.

use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default tolerance on |u| at the grid ends before a potential is rejected
/// for scattering.
pub const DECAY_TOL: f64 = 1e-8;

/// Uniform spatial grid on [x_min, x_max] with n_points nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl SpatialGrid {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points as f64 - 1.0)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + self.dx() * i as f64
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Index of the node nearest to x.
    pub fn nearest(&self, x: f64) -> usize {
        let i = ((x - self.x_min) / self.dx()).round() as i64;
        i.clamp(0, self.n_points as i64 - 1) as usize
    }
}

/// Build a uniform grid; rejects inverted bounds and n < 2.
pub fn make_grid(x_min: f64, x_max: f64, n: usize) -> Result<SpatialGrid> {
    if !(x_min < x_max) {
        return Err(Error::Config(format!(
            "inverted or degenerate bounds: [{x_min}, {x_max}]"
        )));
    }
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 grid points, got {n}")));
    }
    Ok(SpatialGrid { x_min, x_max, n_points: n })
}

/// Complex field sampled on a uniform grid, optionally with its spatial
/// derivative.
#[derive(Debug, Clone)]
pub struct SampledPotential {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
    pub derivative_values: Option<Vec<Complex64>>,
}

impl SampledPotential {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::Config(format!(
                "value count {} does not match grid ({} points)",
                values.len(),
                grid.n_points
            )));
        }
        Ok(Self { grid, values, derivative_values: None })
    }

    pub fn zero(grid: SpatialGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n_points],
            derivative_values: None,
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.xs().map(f).collect();
        Self { grid, values, derivative_values: None }
    }

    /// Largest |u| over the two boundary nodes.
    pub fn boundary_magnitude(&self) -> f64 {
        let first = self.values.first().map_or(0.0, |v| v.norm());
        let last = self.values.last().map_or(0.0, |v| v.norm());
        first.max(last)
    }

    pub fn check_decay(&self, tol: f64) -> Result<()> {
        let observed = self.boundary_magnitude();
        if observed > tol {
            return Err(Error::Decay { observed, tol });
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Derivative samples, computing and caching spectrally when absent.
    pub fn with_derivative(mut self) -> Self {
        if self.derivative_values.is_none() {
            self.derivative_values =
                Some(fft::spectral_derivative(&self.values, self.grid.dx()));
        }
        self
    }
}

/// How `derivative` differentiates the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivativeMethod {
    /// Discrete-Fourier derivative (the data is treated as periodic).
    #[default]
    Spectral,
    /// Fourth-order central differences, one-sided at the boundary.
    FiniteDifference,
}

/// Spatial derivative of a sampled field. Linear; exact for Fourier modes
/// resolved by the grid in the spectral branch.
pub fn derivative(u: &SampledPotential) -> SampledPotential {
    derivative_with(u, DerivativeMethod::Spectral)
}

pub fn derivative_with(u: &SampledPotential, method: DerivativeMethod) -> SampledPotential {
    let dx = u.grid.dx();
    let values = match method {
        DerivativeMethod::Spectral => fft::spectral_derivative(&u.values, dx),
        DerivativeMethod::FiniteDifference => fd_derivative(&u.values, dx),
    };
    SampledPotential { grid: u.grid, values, derivative_values: None }
}

fn fd_derivative(v: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = v.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 5 {
        for i in 0..n {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            out[i] = (v[b] - v[a]) / ((b - a) as f64 * dx);
        }
        return out;
    }
    for i in 2..n - 2 {
        out[i] = (-v[i + 2] + v[i + 1] * 8.0 - v[i - 1] * 8.0 + v[i - 2]) / (12.0 * dx);
    }
    // one-sided fourth-order stencils at the edges
    let edge = |j: [usize; 5], c: [f64; 5]| -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for (idx, coef) in j.iter().zip(c) {
            s += v[*idx] * coef;
        }
        s / (12.0 * dx)
    };
    out[0] = edge([0, 1, 2, 3, 4], [-25.0, 48.0, -36.0, 16.0, -3.0]);
    out[1] = edge([0, 1, 2, 3, 4], [-3.0, -10.0, 18.0, -6.0, 1.0]);
    out[n - 2] = edge([n - 5, n - 4, n - 3, n - 2, n - 1], [-1.0, 6.0, -18.0, 10.0, 3.0]);
    out[n - 1] = edge([n - 5, n - 4, n - 3, n - 2, n - 1], [3.0, -16.0, 36.0, -48.0, 25.0]);
    out
}

/// Trapezoid rule over the grid.
pub fn trapezoid(grid: &SpatialGrid, f: &[f64]) -> f64 {
    let dx = grid.dx();
    let mut s = 0.0;
    for i in 0..f.len() - 1 {
        s += 0.5 * (f[i] + f[i + 1]);
    }
    s * dx
}

/// Trapezoid approximations of ||u||_{L2}, ||u||_{H1} and a weighted
/// H^{3,3} proxy with weight <x> and derivatives up to order 3.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SobolevReport {
    pub l2_norm: f64,
    pub h1_norm: f64,
    pub weighted_h33_estimate: f64,
}

pub fn sobolev_report(u: &SampledPotential) -> Result<SobolevReport> {
    sobolev_report_with_tol(u, DECAY_TOL)
}

pub fn sobolev_report_with_tol(u: &SampledPotential, decay_tol: f64) -> Result<SobolevReport> {
    u.check_decay(decay_tol)?;
    let d1 = derivative(u);
    let d2 = derivative(&d1);
    let d3 = derivative(&d2);
    let sq = |f: &SampledPotential| -> Vec<f64> { f.values.iter().map(|v| v.norm_sqr()).collect() };
    let u2 = sq(u);
    let (u2d1, u2d2, u2d3) = (sq(&d1), sq(&d2), sq(&d3));
    let l2 = trapezoid(&u.grid, &u2).sqrt();
    let h1 = (trapezoid(&u.grid, &u2) + trapezoid(&u.grid, &u2d1)).sqrt();
    // weight <x>^2 = 1 + x^2 applied to each derivative order, cubed weight on u
    let w: Vec<f64> = u.grid.xs().map(|x| 1.0 + x * x).collect();
    let weighted: Vec<f64> = (0..u.values.len())
        .map(|i| w[i].powi(3) * u2[i] + w[i].powi(3) * (u2d1[i] + u2d2[i] + u2d3[i]))
        .collect();
    let h33 = trapezoid(&u.grid, &weighted).sqrt();
    if !(l2.is_finite() && h1.is_finite() && h33.is_finite()) {
        return Err(Error::Config("non-finite norm entries".into()));
    }
    Ok(SobolevReport { l2_norm: l2, h1_norm: h1, weighted_h33_estimate: h33 })
}

/// Spectral cross contour Sigma = R ∪ iR, stored as symmetric node sets that
/// exclude the origin (k = 0 is a spectral singularity of the Lax pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralContour {
    /// Real-axis nodes, symmetric about 0, sorted ascending.
    pub real_nodes: Vec<f64>,
    /// Imaginary-axis nodes s (k = i s), symmetric about 0, sorted ascending.
    pub imag_nodes: Vec<f64>,
}

impl SpectralContour {
    /// Symmetric geometric ladder |k| in [k_min, k_max] with n nodes per
    /// side, replicated on both axes.
    pub fn geometric(k_min: f64, k_max: f64, n_per_side: usize) -> Result<Self> {
        if !(k_min > 0.0 && k_max > k_min) || n_per_side < 2 {
            return Err(Error::Config(format!(
                "bad contour range [{k_min}, {k_max}] x {n_per_side}"
            )));
        }
        let ratio = (k_max / k_min).powf(1.0 / (n_per_side as f64 - 1.0));
        let mut pos: Vec<f64> = (0..n_per_side).map(|i| k_min * ratio.powi(i as i32)).collect();
        pos.last_mut().map(|v| *v = k_max);
        let mut nodes: Vec<f64> = pos.iter().map(|&v| -v).rev().chain(pos.iter().copied()).collect();
        nodes.dedup();
        Ok(Self { real_nodes: nodes.clone(), imag_nodes: nodes })
    }

    /// Uniformly spaced nodes on [k_min, k_max] per side, both axes.
    pub fn uniform(k_min: f64, k_max: f64, n_per_side: usize) -> Result<Self> {
        if !(k_min > 0.0 && k_max > k_min) || n_per_side < 2 {
            return Err(Error::Config(format!(
                "bad contour range [{k_min}, {k_max}] x {n_per_side}"
            )));
        }
        let step = (k_max - k_min) / (n_per_side as f64 - 1.0);
        let pos: Vec<f64> = (0..n_per_side).map(|i| k_min + step * i as f64).collect();
        let nodes: Vec<f64> = pos.iter().map(|&v| -v).rev().chain(pos.iter().copied()).collect();
        Ok(Self { real_nodes: nodes.clone(), imag_nodes: nodes })
    }

    pub fn validate(&self) -> Result<()> {
        let sym = |nodes: &[f64]| -> bool {
            nodes.iter().all(|&v| v != 0.0)
                && nodes
                    .iter()
                    .all(|&v| nodes.iter().any(|&w| (w + v).abs() < 1e-12 * (1.0 + v.abs())))
        };
        if !sym(&self.real_nodes) || !sym(&self.imag_nodes) {
            return Err(Error::Config(
                "contour nodes must be symmetric about 0 and exclude 0".into(),
            ));
        }
        Ok(())
    }

    /// All contour points as complex numbers: real nodes then imaginary nodes.
    pub fn points(&self) -> Vec<Complex64> {
        self.real_nodes
            .iter()
            .map(|&k| Complex64::new(k, 0.0))
            .chain(self.imag_nodes.iter().map(|&s| Complex64::new(0.0, s)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.real_nodes.len() + self.imag_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_abs(&self) -> f64 {
        self.points().iter().map(|k| k.norm()).fold(0.0, f64::max)
    }
}

/// CSV serialization: one '#'-prefixed JSON header line with the grid (and
/// any provenance the caller adds), then x, re_u, im_u rows.
pub fn potential_to_csv(u: &SampledPotential, extra_header: Option<&serde_json::Value>) -> String {
    let mut header = serde_json::json!({
        "x_min": u.grid.x_min,
        "x_max": u.grid.x_max,
        "n_points": u.grid.n_points,
    });
    if let Some(extra) = extra_header {
        if let (Some(map), Some(em)) = (header.as_object_mut(), extra.as_object()) {
            for (k, v) in em {
                map.insert(k.clone(), v.clone());
            }
        }
    }
    let mut out = format!("# {}\nx,re_u,im_u\n", header);
    for (i, v) in u.values.iter().enumerate() {
        out.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", u.grid.x(i), v.re, v.im));
    }
    out
}

pub fn potential_from_csv(text: &str) -> Result<SampledPotential> {
    let mut grid: Option<SpatialGrid> = None;
    let mut xs: Vec<f64> = Vec::new();
    let mut values: Vec<Complex64> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if grid.is_none() {
                let v: serde_json::Value = serde_json::from_str(rest.trim())?;
                grid = Some(SpatialGrid {
                    x_min: v["x_min"].as_f64().ok_or_else(|| Error::Config("missing x_min".into()))?,
                    x_max: v["x_max"].as_f64().ok_or_else(|| Error::Config("missing x_max".into()))?,
                    n_points: v["n_points"]
                        .as_u64()
                        .ok_or_else(|| Error::Config("missing n_points".into()))?
                        as usize,
                });
            }
            continue;
        }
        if line.starts_with('x') {
            continue; // column header
        }
        let mut it = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::Config("short CSV row".into()))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad CSV number: {e}")))
        };
        let x = parse(it.next())?;
        let re = parse(it.next())?;
        let im = parse(it.next())?;
        xs.push(x);
        values.push(Complex64::new(re, im));
    }
    let grid = match grid {
        Some(g) => g,
        None => {
            if xs.len() < 2 {
                return Err(Error::Config("CSV lacks a grid header and enough rows".into()));
            }
            SpatialGrid { x_min: xs[0], x_max: *xs.last().unwrap(), n_points: xs.len() }
        }
    };
    SampledPotential::new(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn make_grid_spacing() {
        let g = make_grid(-10.0, 10.0, 5).unwrap();
        assert_eq!(g.dx(), 5.0);
        let g2 = make_grid(0.0, 1.0, 2).unwrap();
        assert_eq!(g2.x(0), 0.0);
        assert_eq!(g2.x(1), 1.0);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(matches!(make_grid(10.0, -10.0, 5), Err(Error::Config(_))));
        assert!(matches!(make_grid(0.0, 1.0, 1), Err(Error::Config(_))));
    }

    #[test]
    fn sobolev_zero_field() {
        let g = make_grid(-10.0, 10.0, 128).unwrap();
        let r = sobolev_report(&SampledPotential::zero(g)).unwrap();
        assert_eq!(r.l2_norm, 0.0);
        assert_eq!(r.h1_norm, 0.0);
        assert_eq!(r.weighted_h33_estimate, 0.0);
    }

    #[test]
    fn sobolev_sech_l2() {
        // int sech^2 = 2, so ||sech||_L2 = sqrt(2)
        let g = make_grid(-30.0, 30.0, 4096).unwrap();
        let u = SampledPotential::from_fn(g, |x| c(1.0 / x.cosh(), 0.0));
        let r = sobolev_report(&u).unwrap();
        assert!((r.l2_norm - 2.0_f64.sqrt()).abs() < 1e-6, "l2 = {}", r.l2_norm);
    }

    #[test]
    fn sobolev_rejects_nondecaying() {
        let g = make_grid(-10.0, 10.0, 64).unwrap();
        let u = SampledPotential::from_fn(g, |_| c(1.0, 0.0));
        assert!(matches!(sobolev_report(&u), Err(Error::Decay { .. })));
    }

    #[test]
    fn sobolev_symmetry_under_negation_and_conjugation() {
        let g = make_grid(-20.0, 20.0, 1024).unwrap();
        let u = SampledPotential::from_fn(g, |x| c((-x * x / 4.0).exp(), 0.3 * (-x * x / 5.0).exp()));
        let r0 = sobolev_report(&u).unwrap();
        let neg = SampledPotential::new(g, u.values.iter().map(|v| -v).collect()).unwrap();
        let conj = SampledPotential::new(g, u.values.iter().map(|v| v.conj()).collect()).unwrap();
        for r in [sobolev_report(&neg).unwrap(), sobolev_report(&conj).unwrap()] {
            assert!((r.l2_norm - r0.l2_norm).abs() < 1e-12);
            assert!((r.h1_norm - r0.h1_norm).abs() < 1e-12);
            assert!((r.weighted_h33_estimate - r0.weighted_h33_estimate).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_zero_and_fourier_mode() {
        let g = make_grid(-std::f64::consts::PI, std::f64::consts::PI, 257).unwrap();
        let z = derivative(&SampledPotential::zero(g));
        assert!(z.sup_norm() == 0.0);

        // periodic-compatible grid for e^{ix}: drop the duplicated endpoint
        let n = 256;
        let g2 = SpatialGrid { x_min: -std::f64::consts::PI, x_max: std::f64::consts::PI * (1.0 - 2.0 / n as f64), n_points: n };
        let u = SampledPotential::from_fn(g2, |x| Complex64::new(0.0, x).exp());
        let du = derivative(&u);
        let err = du
            .values
            .iter()
            .zip(g2.xs())
            .map(|(v, x)| (v - Complex64::new(0.0, 1.0) * Complex64::new(0.0, x).exp()).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn derivative_of_sech() {
        let g = make_grid(-30.0, 30.0, 4096).unwrap();
        let u = SampledPotential::from_fn(g, |x| c(1.0 / x.cosh(), 0.0));
        let du = derivative(&u);
        let err = du
            .values
            .iter()
            .zip(g.xs())
            .map(|(v, x)| (v - c(-x.tanh() / x.cosh(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "err = {err}");
    }

    #[test]
    fn derivative_is_linear() {
        let g = make_grid(-15.0, 15.0, 512).unwrap();
        let u = SampledPotential::from_fn(g, |x| c((-x * x).exp(), 0.1 * x * (-x * x).exp()));
        let v = SampledPotential::from_fn(g, |x| c(0.5 * (-x * x / 2.0).exp(), (-x * x / 3.0).exp()));
        let (a, b) = (c(1.3, -0.4), c(-0.7, 2.1));
        let combo = SampledPotential::new(
            g,
            u.values.iter().zip(&v.values).map(|(x, y)| a * x + b * y).collect(),
        )
        .unwrap();
        let lhs = derivative(&combo);
        let du = derivative(&u);
        let dv = derivative(&v);
        let err = lhs
            .values
            .iter()
            .zip(du.values.iter().zip(&dv.values))
            .map(|(l, (x, y))| (l - (a * x + b * y)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn grid_refinement_stabilizes_l2() {
        let coarse = make_grid(-20.0, 20.0, 2048).unwrap();
        let fine = make_grid(-20.0, 20.0, 4096).unwrap();
        let f = |x: f64| c((-x * x / 2.0).exp(), 0.0);
        let r1 = sobolev_report(&SampledPotential::from_fn(coarse, f)).unwrap();
        let r2 = sobolev_report(&SampledPotential::from_fn(fine, f)).unwrap();
        assert!((r1.l2_norm - r2.l2_norm).abs() / r2.l2_norm < 1e-6);
    }

    #[test]
    fn contour_symmetric_and_no_origin() {
        let c = SpectralContour::geometric(0.05, 20.0, 24).unwrap();
        c.validate().unwrap();
        assert!(c.points().iter().all(|k| k.norm() > 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let g = make_grid(-5.0, 5.0, 64).unwrap();
        let u = SampledPotential::from_fn(g, |x| c((-x * x).exp(), x * (-x * x).exp()));
        let text = potential_to_csv(&u, None);
        let back = potential_from_csv(&text).unwrap();
        assert_eq!(back.grid, u.grid);
        let err = back
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert_eq!(err, 0.0);
    }
}

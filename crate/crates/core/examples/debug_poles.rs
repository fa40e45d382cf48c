use fl_core::field::{make_grid, SampledPotential, SpectralContour};
use fl_core::rhp::{nsoliton_field, FlParams};
use fl_core::scattering::{scattering_coefficients, wronskian_a, ScatterConfig};
use fl_core::spectrum::{find_zeros, winding_number, SearchBox, SolitonEnsemble};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() {
    let p = FlParams::new(1.0, 2.0).unwrap();
    let k1 = Complex64::from_polar(1.2, PI / 4.0);
    let ens_true = SolitonEnsemble::one(k1, Complex64::new(1.0, 0.0)).unwrap();
    let scatter_grid = make_grid(-35.0, 35.0, 8193).unwrap();
    let mut u = nsoliton_field(&ens_true, None, scatter_grid, 0.0, &p).unwrap();
    for (i, x) in scatter_grid.xs().enumerate() {
        u.values[i] += Complex64::new(0.2 * (-x * x).exp(), 0.0);
    }
    u.derivative_values = None;

    let cfg = ScatterConfig::default();
    println!("|a(planted k1)| = {:.3e}", wronskian_a(&u, k1, &cfg).unwrap().norm());
    let mut f = |k: Complex64| wronskian_a(&u, k, &cfg);
    for bx in [
        SearchBox { re_min: 0.5, re_max: 1.3, im_min: 0.5, im_max: 1.3 },
        SearchBox { re_min: 0.4, re_max: 1.5, im_min: 0.4, im_max: 1.5 },
        SearchBox { re_min: 0.05, re_max: 1.5, im_min: 0.05, im_max: 1.5 },
    ] {
        match winding_number(&mut f, &bx) {
            Ok(w) => {
                println!("box [{},{}]x[{},{}]: winding = {w}", bx.re_min, bx.re_max, bx.im_min, bx.im_max);
                if let Ok(zs) = find_zeros(&mut f, &bx) {
                    for z in zs {
                        println!("   zero at {z}");
                    }
                }
            }
            Err(e) => println!("box error: {e}"),
        }
    }
    // also scattering-based |a| minimum to sniff near-contour zeros
    let contour = SpectralContour::geometric(0.05, 3.0, 24).unwrap();
    let sd = scattering_coefficients(&u, &contour).unwrap();
    println!("min |a| on contour = {:.4}", sd.invariants.a_abs_min);

    // LS candidates at the found zero
    let kf = Complex64::new(0.8964296166202997, 0.8349620194203616);
    let g = scatter_grid;
    let n = g.n_points;
    let i0 = g.nearest(0.0);
    let stations = vec![n / 8, n / 4, (3 * n) / 8, i0 - 16, i0, i0 + 16, (5 * n) / 8, (3 * n) / 4, (7 * n) / 8];
    let (cm, cp) = fl_core::scattering::debug_columns(&u, kf, &stations, &cfg).unwrap();
    for (si, &st) in stations.iter().enumerate() {
        let phase = (Complex64::new(0.0, 2.0) * kf * kf * g.x(st)).exp();
        for comp in 0..2 {
            let w = phase * cp[si][comp];
            let v = cm[si][comp];
            println!(
                "x = {:8.3} comp {}: |v| = {:9.3e} |w| = {:9.3e}  v/w = {:.6}",
                g.x(st), comp, v.norm(), w.norm(), v / w
            );
        }
    }
    // a'(kf)
    let h = 1e-6 * (1.0 + kf.norm());
    let ap = (wronskian_a(&u, kf + h, &cfg).unwrap() - wronskian_a(&u, kf - h, &cfg).unwrap()) / (2.0 * h);
    println!("a'(kf) = {ap}");
}

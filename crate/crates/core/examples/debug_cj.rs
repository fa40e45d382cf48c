use fl_core::field::make_grid;
use fl_core::rhp::{nsoliton_field, FlParams};
use fl_core::scattering::{wronskian_a, ScatterConfig};
use fl_core::spectrum::SolitonEnsemble;
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() {
    let p = FlParams::new(1.0, 2.0).unwrap();
    let k1 = Complex64::from_polar(1.0, PI / 4.0);
    let ens = SolitonEnsemble::one(k1, Complex64::new(1.0, 0.0)).unwrap();
    let g = make_grid(-30.0, 30.0, 8193).unwrap();
    let u = nsoliton_field(&ens, None, g, 0.0, &p).unwrap();
    let cfg = ScatterConfig::default();

    // trace-formula a'(k1): a = (k^2-i)/(k^2+i), a' = 4ik/(k^2+i)^2
    let ap_true = Complex64::new(0.0, 4.0) * k1 / ((k1 * k1 + Complex64::new(0.0, 1.0)).powi(2));
    // numeric a'
    let h = 1e-6 * (1.0 + k1.norm());
    let ap = (wronskian_a(&u, k1 + h, &cfg).unwrap() - wronskian_a(&u, k1 - h, &cfg).unwrap())
        / (2.0 * h);
    println!("a' numeric = {ap}, true = {ap_true}, rel = {:.3e}", (ap - ap_true).norm() / ap_true.norm());

    // per-station gamma ratios
    use fl_core::scattering::debug_columns;
    for st in [2048usize, 3072, 4096, 5120, 6144] {
        let (cm, cp) = debug_columns(&u, k1, &[st], &cfg).unwrap();
        let phase = (Complex64::new(0.0, 2.0) * k1 * k1 * g.x(st)).exp();
        let g0 = cm[0][0] / (phase * cp[0][0]);
        let g1 = cm[0][1] / (phase * cp[0][1]);
        println!(
            "x = {:7.3}: gamma(comp0) = {g0}, gamma(comp1) = {g1}",
            g.x(st)
        );
    }
    println!("expected gamma = c1 * a'(k1) = {}", ap_true);

    // full extraction path
    use fl_core::field::SpectralContour;
    use fl_core::scattering::scattering_coefficients;
    use fl_core::spectrum::{find_discrete_spectrum, SearchBox};
    let contour = SpectralContour::geometric(0.05, 3.0, 24).unwrap();
    let sd = scattering_coefficients(&u, &contour).unwrap();
    let bx = SearchBox { re_min: 0.3, re_max: 1.4, im_min: 0.3, im_max: 1.4 };
    let ens2 = find_discrete_spectrum(&sd, &u, &bx).unwrap();
    let (kf, cf) = ens2.representatives()[0];
    println!("found k = {kf} (err {:.2e})", (kf - k1).norm());
    println!("found c = {cf} (err {:.2e})", (cf - Complex64::new(1.0, 0.0)).norm());

    // gamma at the refined k via stations, then c = gamma/a'
    for st_set in [vec![4096usize], vec![2048, 4096, 6144]] {
        let (cm, cp) = debug_columns(&u, kf, &st_set, &cfg).unwrap();
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for (si, &st) in st_set.iter().enumerate() {
            let phase = (Complex64::new(0.0, 2.0) * kf * kf * g.x(st)).exp();
            for comp in 0..2 {
                let w = phase * cp[si][comp];
                num += w.conj() * cm[si][comp];
                den += w.norm_sqr();
            }
        }
        let gamma_ls = num / den;
        let ap2 = (wronskian_a(&u, kf + h, &cfg).unwrap() - wronskian_a(&u, kf - h, &cfg).unwrap())
            / (2.0 * h);
        println!("stations {:?}: gamma_ls = {gamma_ls}, c = {} ", st_set, gamma_ls / ap2);
    }
    // weights and proportionality residuals per station at the refined k
    let st_set = [2048usize, 4096, 6144];
    let (cm, cp) = debug_columns(&u, kf, &st_set, &cfg).unwrap();
    let gamma_true = ap_true;
    for (si, &st) in st_set.iter().enumerate() {
        let phase = (Complex64::new(0.0, 2.0) * kf * kf * g.x(st)).exp();
        for comp in 0..2 {
            let w = phase * cp[si][comp];
            let v = cm[si][comp];
            println!(
                "x = {:7.2} comp {}: |w| = {:.3e}, |v| = {:.3e}, |v - gamma w| = {:.3e}",
                g.x(st), comp, w.norm(), v.norm(), (v - gamma_true * w).norm()
            );
        }
    }
}
// second entry point style: extend main via env flag is overkill; just a fn

use fl_core::asymptotic::{annulus_radius, cone_select, modified_constant, ConeSpec, ModSign};
use fl_core::evolve::{evolve, EvolverConfig};
use fl_core::field::{make_grid, SampledPotential, SpectralContour};
use fl_core::rhp::{nsoliton_field, soliton_velocity, FlParams};
use fl_core::scattering::scattering_coefficients;
use fl_core::spectrum::{find_discrete_spectrum, SearchBox, SolitonEnsemble};
use num_complex::Complex64;
use std::f64::consts::PI;

fn main() {
    let p = FlParams::new(1.0, 2.0).unwrap();
    let k1 = Complex64::from_polar(1.2, PI / 4.0);
    let ens_true = SolitonEnsemble::one(k1, Complex64::new(1.0, 0.0)).unwrap();
    let v = soliton_velocity(&p, k1.norm());
    println!("v = {v}");
    let perturbed = |grid| -> SampledPotential {
        let mut f = nsoliton_field(&ens_true, None, grid, 0.0, &p).unwrap();
        for (i, x) in f.grid.xs().enumerate() {
            let y = x - 10.0;
            f.values[i] += Complex64::new(0.4663 * y * (-y * y).exp(), 0.0);
        }
        f.derivative_values = None;
        f
    };
    let big = std::env::args().any(|a| a == "--big");
    let g = if big { make_grid(-340.0, 180.0, 20480).unwrap() } else { make_grid(-160.0, 44.0, 8192).unwrap() };
    let u0 = perturbed(g);

    let contour = SpectralContour::geometric(0.05, 3.0, 24).unwrap();
    let scatter_grid = make_grid(-35.0, 35.0, 8193).unwrap();
    let u0s = perturbed(scatter_grid);
    let sd = scattering_coefficients(&u0s, &contour).unwrap();
    let bx = SearchBox { re_min: 0.5, re_max: 1.3, im_min: 0.5, im_max: 1.3 };
    let ens = find_discrete_spectrum(&sd, &u0s, &bx).unwrap();
    let (kf, cf) = ens.representatives()[0];
    println!("extracted k = {kf}, c = {cf}");
    let max_r = sd.r_values.iter().map(|r| r.norm()).fold(0.0, f64::max);
    println!("max |r| = {max_r:.4}");

    let cone = ConeSpec { x1: -4.0, x2: 4.0, v1: v - 0.15, v2: v + 0.15 };
    let sel = cone_select(&ens, Some(&sd), cone, p.alpha, p.beta).unwrap();
    let f1 = annulus_radius(p.alpha, p.beta, cone.v1).unwrap();
    let f2 = annulus_radius(p.alpha, p.beta, cone.v2).unwrap();
    let cminus = modified_constant(&ens, Some(&sd), kf, cf, f2, f1, ModSign::Minus).unwrap();
    let cplus = modified_constant(&ens, Some(&sd), kf, cf, f2, f1, ModSign::Plus).unwrap();
    println!("c unmodified = {cf}");
    println!("c^- = {cminus}  (|.| = {})", cminus.norm());
    println!("c^+ = {cplus}  (|.| = {})", cplus.norm());
    println!("selected by cone_select: {:?}", sel.c_modified);

    let dt: f64 = std::env::args()
        .skip_while(|a| a != "--dt")
        .nth(1)
        .and_then(|v| v.parse().ok())
        .unwrap_or(8e-3);
    println!("dt = {dt}");
    let times = [20.0, 40.0, 80.0, 160.0];
    let mut cfg = EvolverConfig::new(p.alpha, p.beta, dt, 160.0);
    cfg.snap_times = times.to_vec();
    let run = evolve(&u0, &cfg).unwrap();

    for (label, cmod) in [("raw", cf), ("minus", cminus), ("plus", cplus)] {
        println!("--- constant: {label} ---");
        for (t, field) in run.snapshots.iter().skip(1) {
            if !times.iter().any(|&ts| (ts - t).abs() < 1e-6) {
                continue;
            }
            let lo = cone.x1 + cone.v1 * t;
            let hi = cone.x2 + cone.v2 * t;
            let sub_ens = SolitonEnsemble::one(kf, cmod).unwrap();
            let sub = nsoliton_field(&sub_ens, None, field.grid, *t, &p).unwrap();
            let mut residual = 0.0_f64;
            let mut arg = 0.0_f64;
            for i in 0..field.grid.n_points {
                let x = field.grid.x(i);
                if x < lo || x > hi {
                    continue;
                }
                let d = (field.values[i] - sub.values[i]).norm();
                if d > residual {
                    residual = d;
                    arg = x;
                }
            }
            let far = field.values[field.grid.nearest(hi + 20.0)].norm();
            let peak_of = |f: &SampledPotential, lo: f64, hi: f64| -> (f64, f64, Complex64) {
                let mut best = (0.0, 0.0, Complex64::new(0.0, 0.0));
                for i in 0..f.grid.n_points {
                    let x = f.grid.x(i);
                    if x < lo || x > hi { continue; }
                    if f.values[i].norm() > best.1 {
                        best = (x, f.values[i].norm(), f.values[i]);
                    }
                }
                best
            };
            let (xp, ap, vp) = peak_of(field, lo, hi);
            let (xm, am, vm) = peak_of(&sub, lo, hi);
            println!(
                "  t = {t:6.1}: res = {residual:.4e} at {arg:8.2}; pde peak ({xp:8.3}, {ap:.4}), model peak ({xm:8.3}, {am:.4}), dphase = {:+.4}, far = {far:.1e}",
                (vp / vm).arg()
            );
        }
    }
}

//! Phase geometry, cone/soliton selection with modified norming constants,
//! parabolic-cylinder leading coefficients and the residual-rate fitter.

use crate::error::{Error, Result};
use crate::gamma::gamma;
use crate::rhp::{nsoliton_field, reconstruct, solve_reflectionless, FlParams};
use crate::scattering::ScatteringData;
use crate::spectrum::{delta_exponential, Axis, ContourPiece, SolitonEnsemble};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const K0_FLOOR: f64 = 1e-3;
/// Below this time the asymptotic evaluation is flagged pre-asymptotic.
pub const T_MIN: f64 = 10.0;

/// Phase theta(k) = k^2 xi - alpha beta + alpha beta^2/(4 k^2) and its
/// four stationary points +-k0, +-i k0 with k0 = (alpha beta^2 / (4 xi))^{1/4}.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhaseGeometry {
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
    pub k0: f64,
    /// z_1 = k0, z_2 = i k0, z_3 = -k0, z_4 = -i k0
    pub stationary_points: [Complex64; 4],
    /// nu(z_n); zero until radiation data is attached
    pub nu: [f64; 4],
}

/// theta(k) for the given geometry.
pub fn phase(k: Complex64, geo: &PhaseGeometry) -> Result<Complex64> {
    if k.norm() == 0.0 {
        return Err(Error::OriginSingularity);
    }
    let (a, b) = (geo.alpha, geo.beta);
    Ok(k * k * geo.xi - a * b + a * b * b / (4.0 * k * k))
}

/// theta'(k) = 2 k xi - alpha beta^2 / (2 k^3).
pub fn phase_derivative(k: Complex64, geo: &PhaseGeometry) -> Result<Complex64> {
    if k.norm() == 0.0 {
        return Err(Error::OriginSingularity);
    }
    Ok(2.0 * k * geo.xi - geo.alpha * geo.beta * geo.beta / (2.0 * k * k * k))
}

/// Build the four-point phase geometry for xi = x/t + alpha > 0.
pub fn stationary_points(alpha: f64, beta: f64, xi: f64) -> Result<PhaseGeometry> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Config("need alpha, beta > 0".into()));
    }
    if xi <= 0.0 {
        return Err(Error::DegenerateCone { xi });
    }
    let k0 = (alpha * beta * beta / (4.0 * xi)).powf(0.25);
    if k0 < K0_FLOOR {
        return Err(Error::DegenerateCone { xi });
    }
    let i = Complex64::new(0.0, 1.0);
    Ok(PhaseGeometry {
        alpha,
        beta,
        xi,
        k0,
        stationary_points: [
            Complex64::new(k0, 0.0),
            i * k0,
            Complex64::new(-k0, 0.0),
            -i * k0,
        ],
        nu: [0.0; 4],
    })
}

/// nu at a stationary point from the jump determinant on its axis:
/// on R, nu = -(1/2pi) ln(1 + |r|^2); on iR, nu = -(1/2pi) ln(1 - |r|^2).
pub fn nu_at(axis: Axis, r: Complex64) -> f64 {
    match axis {
        Axis::Real => -(1.0 + r.norm_sqr()).ln() / (2.0 * PI),
        Axis::Imag => -(1.0 - r.norm_sqr()).ln() / (2.0 * PI),
    }
}

impl PhaseGeometry {
    /// Attach nu(z_n) values interpolated from sampled reflection data.
    pub fn with_nu_from(mut self, sd: &ScatteringData) -> Self {
        for (n, z) in self.stationary_points.iter().enumerate() {
            let axis = if n % 2 == 0 { Axis::Real } else { Axis::Imag };
            let r = sd.r_interp(*z).unwrap_or(Complex64::new(0.0, 0.0));
            self.nu[n] = nu_at(axis, r);
        }
        self
    }
}

/// f(v) = (alpha beta^2 / (4 (v + alpha)))^{1/4}, the inverse of the
/// soliton speed-modulus relation; strictly decreasing on (-alpha, inf).
pub fn annulus_radius(alpha: f64, beta: f64, v: f64) -> Result<f64> {
    if v + alpha <= 0.0 {
        return Err(Error::DegenerateCone { xi: v + alpha });
    }
    Ok((alpha * beta * beta / (4.0 * (v + alpha))).powf(0.25))
}

/// Space-time cone x = x0 + v t, x0 in [x1, x2], v in [v1, v2].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConeSpec {
    pub x1: f64,
    pub x2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl ConeSpec {
    pub fn validate(&self, alpha: f64) -> Result<()> {
        if !(self.x1 <= self.x2) {
            return Err(Error::Config("cone needs x1 <= x2".into()));
        }
        if !(-alpha < self.v1 && self.v1 <= self.v2 && self.v2 < 0.0) {
            return Err(Error::DegenerateCone { xi: self.v1 + alpha });
        }
        Ok(())
    }

    pub fn contains(&self, x: f64, t: f64) -> bool {
        let lo = self.x1 + self.v1 * t;
        let hi = self.x2 + self.v2 * t;
        x >= lo && x <= hi
    }
}

/// Partition of the discrete spectrum by the cone annulus, with the
/// modified norming constants of the surviving solitons.
#[derive(Debug, Clone)]
pub struct ConeSelection {
    pub spec: ConeSpec,
    /// outer and inner annulus radii: f(v1) >= f(v2)
    pub f_v1: f64,
    pub f_v2: f64,
    /// index partition of the expanded 2N pole list
    pub k_plus: Vec<usize>,
    pub k_in: Vec<usize>,
    pub k_minus: Vec<usize>,
    /// N(I): number of expanded poles inside the annulus
    pub n_in: usize,
    /// modified constants c_j^-(I) for the surviving representatives
    pub c_modified: Vec<Complex64>,
    /// the surviving sub-ensemble carrying c_modified
    pub selected: SolitonEnsemble,
}

/// Sign selecting which modified constant (cji) produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModSign {
    Plus,
    Minus,
}

/// Contour pieces of I_- (|zeta| < inner) or I_+ (|zeta| > outer) on both
/// axes of the cross, truncated to the sampled contour range.
fn interval_pieces(sign: ModSign, inner: f64, outer: f64, k_max: f64) -> Vec<ContourPiece> {
    match sign {
        ModSign::Minus => vec![
            ContourPiece { axis: Axis::Real, lo: -inner, hi: inner, sign: -1.0 },
            ContourPiece { axis: Axis::Imag, lo: -inner, hi: inner, sign: -1.0 },
        ],
        ModSign::Plus => vec![
            ContourPiece { axis: Axis::Real, lo: outer, hi: k_max, sign: 1.0 },
            ContourPiece { axis: Axis::Real, lo: -k_max, hi: -outer, sign: 1.0 },
            ContourPiece { axis: Axis::Imag, lo: outer, hi: k_max, sign: 1.0 },
            ContourPiece { axis: Axis::Imag, lo: -k_max, hi: -outer, sign: 1.0 },
        ],
    }
}

/// c_j^{+-}(I): the squared Blaschke product over the poles on the chosen
/// side of the annulus times the signed delta exponential over I_{+-}.
pub fn modified_constant(
    ens: &SolitonEnsemble,
    r_data: Option<&ScatteringData>,
    k_j: Complex64,
    c_j: Complex64,
    inner: f64,
    outer: f64,
    sign: ModSign,
) -> Result<Complex64> {
    let mut c = c_j;
    for (k_n, _) in ens.expanded() {
        let selected = match sign {
            ModSign::Plus => k_n.norm() > outer,
            ModSign::Minus => k_n.norm() < inner,
        };
        if selected {
            let factor = (k_j - k_n) / (k_j - k_n.conj());
            c *= factor * factor;
        }
    }
    if let Some(sd) = r_data {
        if sd.r_values.iter().any(|r| r.norm() > 0.0) {
            let k_max = sd.contour.max_abs();
            let pieces = interval_pieces(sign, inner, outer, k_max);
            // pieces carry the +- sign of (cji)
            c *= delta_exponential(sd, &pieces, k_j)?;
        }
    }
    Ok(c)
}

/// Partition the ensemble by the cone annulus and compute the modified
/// constants for the surviving solitons (the Delta^- compatible c_j^-(I)
/// used for t -> +infinity).
pub fn cone_select(
    ens: &SolitonEnsemble,
    r_data: Option<&ScatteringData>,
    cone: ConeSpec,
    alpha: f64,
    beta: f64,
) -> Result<ConeSelection> {
    cone.validate(alpha)?;
    let f_v1 = annulus_radius(alpha, beta, cone.v1)?;
    let f_v2 = annulus_radius(alpha, beta, cone.v2)?;
    let all = ens.expanded();
    let mut k_plus = Vec::new();
    let mut k_in = Vec::new();
    let mut k_minus = Vec::new();
    for (j, (k, _)) in all.iter().enumerate() {
        let m = k.norm();
        if m > f_v1 {
            k_plus.push(j);
        } else if m < f_v2 {
            k_minus.push(j);
        } else {
            // boundary poles land in the closed annulus
            k_in.push(j);
        }
    }
    let mut c_modified = Vec::new();
    let mut selected_pairs = Vec::new();
    for &(k, c) in ens.representatives() {
        let m = k.norm();
        if m >= f_v2 && m <= f_v1 {
            let cm = modified_constant(ens, r_data, k, c, f_v2, f_v1, ModSign::Minus)?;
            c_modified.push(cm);
            selected_pairs.push((k, cm));
        }
    }
    let selected = SolitonEnsemble::new(selected_pairs)?;
    Ok(ConeSelection {
        spec: cone,
        f_v1,
        f_v2,
        n_in: k_in.len(),
        k_plus,
        k_in,
        k_minus,
        c_modified,
        selected,
    })
}

/// Parabolic-cylinder leading coefficients at one stationary point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PCCoefficients {
    pub r0: Complex64,
    pub nu: f64,
    pub beta12: Complex64,
    pub beta21: Complex64,
    /// sup-norm of [[0, beta12], [beta21, 0]]
    pub m1_norm: f64,
}

/// Assemble r0 and the beta coefficients:
///
///   r0 = r(z) delta(z)^{-2} e^{i nu (ln k0^4 - ln 4 alpha beta^2 t)}
///        e^{2 i t (alpha beta^2/(2 k0^2) - alpha beta)},
///   beta12 = sqrt(2 pi) e^{i pi/4} e^{-pi nu/2} / (r0 Gamma(-i nu)),
///   beta21 = -sqrt(2 pi) e^{-i pi/4} e^{-pi nu/2} / (conj(r0) Gamma(i nu)).
pub fn pc_coefficients(
    r_at_z: Complex64,
    nu: f64,
    delta_at_z: Complex64,
    k0: f64,
    t: f64,
    alpha: f64,
    beta: f64,
) -> Result<PCCoefficients> {
    if !nu.is_finite() || nu.abs() > 50.0 {
        return Err(Error::GammaOverflow { nu });
    }
    if r_at_z.norm() == 0.0 || nu == 0.0 {
        return Ok(PCCoefficients {
            r0: Complex64::new(0.0, 0.0),
            nu,
            beta12: Complex64::new(0.0, 0.0),
            beta21: Complex64::new(0.0, 0.0),
            m1_norm: 0.0,
        });
    }
    let i = Complex64::new(0.0, 1.0);
    let log_scale = (k0.powi(4)).ln() - (4.0 * alpha * beta * beta * t).ln();
    let r0 = r_at_z / (delta_at_z * delta_at_z)
        * (i * nu * log_scale).exp()
        * (i * 2.0 * t * (alpha * beta * beta / (2.0 * k0 * k0) - alpha * beta)).exp();
    let pref = (2.0 * PI).sqrt() * (-PI * nu / 2.0).exp();
    let beta12 = pref * (i * PI / 4.0).exp() / (r0 * gamma(-i * nu));
    let beta21 = -pref * (-i * PI / 4.0).exp() / (r0.conj() * gamma(i * nu));
    Ok(PCCoefficients {
        r0,
        nu,
        beta12,
        beta21,
        m1_norm: beta12.norm().max(beta21.norm()),
    })
}

/// Leading asymptotic inside the cone at one (x, t).
#[derive(Debug, Clone)]
pub struct LeadingAsymptotic {
    pub u_lead: Complex64,
    pub correction_bound: f64,
    pub pre_asymptotic: bool,
    pub geometry: PhaseGeometry,
}

/// u_lead is the K(I)-soliton with modified constants; the correction
/// magnitude is (k0^2 / (2 beta sqrt(alpha t))) times the norm bound of
/// sum_n M_1^pc(z_n), assembled from |r(z_n)| and nu(z_n) (all remaining
/// r0 prefactors are unimodular, so only the moduli enter the bound).
pub fn leading_asymptotic(
    ens: &SolitonEnsemble,
    r_data: Option<&ScatteringData>,
    cone: ConeSpec,
    params: &FlParams,
    x: f64,
    t: f64,
) -> Result<LeadingAsymptotic> {
    if t <= 0.0 {
        return Err(Error::OutsideCone { x, t });
    }
    if !cone.contains(x, t) {
        return Err(Error::OutsideCone { x, t });
    }
    let xi = x / t + params.alpha;
    let mut geometry = stationary_points(params.alpha, params.beta, xi)?;

    let reflectionless = match r_data {
        None => true,
        Some(sd) => sd.r_values.iter().all(|r| r.norm() == 0.0),
    };

    let selection = cone_select(ens, r_data, cone, params.alpha, params.beta)?;
    let u_lead = if selection.selected.is_empty() {
        Complex64::new(0.0, 0.0)
    } else {
        let ms = solve_reflectionless(&selection.selected, &[], x, t, params)?;
        reconstruct(&ms, &selection.selected).u_value
    };

    let correction_bound = if reflectionless {
        0.0
    } else {
        let sd = r_data.expect("non-reflectionless requires data");
        geometry = geometry.with_nu_from(sd);
        let mut sum12 = 0.0;
        let mut sum21 = 0.0;
        for (n, z) in geometry.stationary_points.iter().enumerate() {
            let r = sd.r_interp(*z).unwrap_or(Complex64::new(0.0, 0.0));
            // |r0| = |r(z_n)|: the delta and log-scale prefactors are
            // unimodular, so unit delta gives the exact moduli
            let pc = pc_coefficients(
                r,
                geometry.nu[n],
                Complex64::new(1.0, 0.0),
                geometry.k0,
                t,
                params.alpha,
                params.beta,
            )?;
            sum12 += pc.beta12.norm();
            sum21 += pc.beta21.norm();
        }
        let m1_bound = sum12.max(sum21);
        geometry.k0.powi(2) / (2.0 * params.beta * (params.alpha * t).sqrt()) * m1_bound
    };

    Ok(LeadingAsymptotic {
        u_lead,
        correction_bound,
        pre_asymptotic: t < T_MIN,
        geometry,
    })
}

/// Sup-norm residual between an evolved field and the leading asymptotic
/// over the cone slice at time t, with the largest correction bound seen.
pub fn cone_slice_residual(
    ens: &SolitonEnsemble,
    r_data: Option<&ScatteringData>,
    cone: ConeSpec,
    params: &FlParams,
    u_evolved: &crate::field::SampledPotential,
    t: f64,
) -> Result<(f64, f64)> {
    let lo = cone.x1 + cone.v1 * t;
    let hi = cone.x2 + cone.v2 * t;
    let selection = cone_select(ens, r_data, cone, params.alpha, params.beta)?;
    let grid = u_evolved.grid;
    let mut residual = 0.0_f64;
    let mut bound = 0.0_f64;
    // reuse the slice's soliton field from the batch evaluator
    let sub = nsoliton_field(&selection.selected, None, grid, t, params)?;
    for i in 0..grid.n_points {
        let x = grid.x(i);
        if x < lo || x > hi {
            continue;
        }
        residual = residual.max((u_evolved.values[i] - sub.values[i]).norm());
    }
    // bound at the slice midpoint velocity
    let la = leading_asymptotic(ens, r_data, cone, params, 0.5 * (lo + hi), t)?;
    bound = bound.max(la.correction_bound);
    Ok((residual, bound))
}

/// Ordinary least squares on (ln t, ln residual).
pub fn fit_decay_rate(samples: &[(f64, f64)]) -> Result<(f64, f64)> {
    if samples.len() < 4 {
        return Err(Error::InsufficientSamples(samples.len()));
    }
    for w in samples.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::Config("t samples must increase".into()));
        }
    }
    if samples.iter().any(|&(_, r)| r <= 0.0) {
        return Err(Error::Config("residuals must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = samples.iter().map(|&(t, r)| (t.ln(), r.ln())).collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|(x, _)| x).sum();
    let sy: f64 = pts.iter().map(|(_, y)| y).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    Ok((slope, intercept))
}

//! Discrete spectrum: winding-number zero search for a(k) in D+, the
//! reflectionless trace formula, partial Blaschke products and the
//! Cauchy-type delta exponentials.

use crate::error::{Error, Result};
use crate::field::SampledPotential;
use crate::mat2::{ONE, ZERO};
use crate::scattering::{jost_columns_at, wronskian_ab, LaxPotential, ScatterConfig, ScatteringData};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// |a'(k_j)| below which a zero is treated as non-simple.
pub const SIMPLE_TOL: f64 = 1e-8;

/// Reflectionless discrete data. Only the N first-quadrant representative
/// poles are stored; the symmetry partners -k_j (with equal norming
/// constant) are expanded on demand.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolitonEnsemble {
    pairs: Vec<(Complex64, Complex64)>,
}

#[derive(Serialize, Deserialize)]
struct PairJson {
    re_k: f64,
    im_k: f64,
    re_c: f64,
    im_c: f64,
}

impl SolitonEnsemble {
    pub fn empty() -> Self {
        Self { pairs: Vec::new() }
    }

    /// Build from first-quadrant representatives (k_j, c_j).
    pub fn new(pairs: Vec<(Complex64, Complex64)>) -> Result<Self> {
        for (k, _) in &pairs {
            if !(k.re > 0.0 && k.im > 0.0) {
                return Err(Error::Config(format!(
                    "pole {k} is not in the open first quadrant"
                )));
            }
        }
        let mut sorted = pairs;
        sorted.sort_by(|a, b| {
            (a.0.re, a.0.im)
                .partial_cmp(&(b.0.re, b.0.im))
                .unwrap()
        });
        let ens = Self { pairs: sorted };
        if !ens.is_empty() && ens.rho() <= 0.0 {
            return Err(Error::Config("discrete spectrum touches the contour".into()));
        }
        Ok(ens)
    }

    pub fn one(k: Complex64, c: Complex64) -> Result<Self> {
        Self::new(vec![(k, c)])
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Number of first-quadrant representatives.
    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn representatives(&self) -> &[(Complex64, Complex64)] {
        &self.pairs
    }

    /// Full 2N pole list: representatives then their -k_j partners.
    pub fn expanded(&self) -> Vec<(Complex64, Complex64)> {
        let mut out = self.pairs.clone();
        out.extend(self.pairs.iter().map(|&(k, c)| (-k, c)));
        out
    }

    /// Distance from the discrete spectrum to Sigma = R ∪ iR.
    pub fn rho(&self) -> f64 {
        self.pairs
            .iter()
            .map(|(k, _)| k.re.abs().min(k.im.abs()))
            .fold(f64::INFINITY, f64::min)
    }

    /// Replace the norming constants (used by the cone modification).
    pub fn with_constants(&self, c: Vec<Complex64>) -> Result<Self> {
        if c.len() != self.pairs.len() {
            return Err(Error::Config("constant count mismatch".into()));
        }
        Self::new(
            self.pairs
                .iter()
                .zip(c)
                .map(|(&(k, _), cj)| (k, cj))
                .collect(),
        )
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<PairJson> = self
            .pairs
            .iter()
            .map(|(k, c)| PairJson { re_k: k.re, im_k: k.im, re_c: c.re, im_c: c.im })
            .collect();
        serde_json::to_string_pretty(&rows).expect("ensemble serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rows: Vec<PairJson> = serde_json::from_str(text)?;
        Self::new(
            rows.iter()
                .map(|r| (Complex64::new(r.re_k, r.im_k), Complex64::new(r.re_c, r.im_c)))
                .collect(),
        )
    }
}

impl Serialize for SolitonEnsemble {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<PairJson> = self
            .pairs
            .iter()
            .map(|(k, c)| PairJson { re_k: k.re, im_k: k.im, re_c: c.re, im_c: c.im })
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SolitonEnsemble {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<PairJson> = Vec::deserialize(d)?;
        SolitonEnsemble::new(
            rows.iter()
                .map(|r| (Complex64::new(r.re_k, r.im_k), Complex64::new(r.re_c, r.im_c)))
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Reflectionless trace formula a(k) = prod (k - k_j)/(k - kbar_j) over the
/// expanded 2N pole set.
pub fn trace_formula_a(ens: &SolitonEnsemble, k: Complex64) -> Result<Complex64> {
    let mut a = ONE;
    for (kj, _) in ens.expanded() {
        let den = k - kj.conj();
        if den.norm() < 1e-14 * (1.0 + k.norm()) {
            return Err(Error::PoleHit(k));
        }
        a *= (k - kj) / den;
    }
    Ok(a)
}

/// d/dk of the trace formula at one of its zeros k_m (simple-zero form).
pub fn trace_formula_a_prime_at_zero(ens: &SolitonEnsemble, k_m: Complex64) -> Complex64 {
    let mut p = ONE / (k_m - k_m.conj());
    for (kj, _) in ens.expanded() {
        if (kj - k_m).norm() < 1e-12 * (1.0 + k_m.norm()) {
            continue;
        }
        p *= (k_m - kj) / (k_m - kj.conj());
    }
    p
}

/// Partial Blaschke product a_Delta over a subset of the expanded poles.
#[derive(Debug, Clone)]
pub struct BlaschkeSplit {
    pub delta: Vec<usize>,
    pub zeros: Vec<Complex64>,
    pub poles: Vec<Complex64>,
}

pub fn blaschke_split(ens: &SolitonEnsemble, delta: &[usize]) -> Result<BlaschkeSplit> {
    let all = ens.expanded();
    let mut idx: Vec<usize> = delta.to_vec();
    idx.sort_unstable();
    idx.dedup();
    if idx.iter().any(|&j| j >= all.len()) {
        return Err(Error::Config("delta index out of range".into()));
    }
    Ok(BlaschkeSplit {
        zeros: idx.iter().map(|&j| all[j].0).collect(),
        poles: idx.iter().map(|&j| all[j].0.conj()).collect(),
        delta: idx,
    })
}

impl BlaschkeSplit {
    pub fn eval(&self, k: Complex64) -> Result<Complex64> {
        let mut v = ONE;
        for (z, p) in self.zeros.iter().zip(&self.poles) {
            let den = k - p;
            if den.norm() < 1e-14 * (1.0 + k.norm()) {
                return Err(Error::PoleHit(k));
            }
            v *= (k - z) / den;
        }
        Ok(v)
    }

    /// d/dk a_Delta at a member zero k_m (simple-zero form).
    pub fn deriv_at_zero(&self, k_m: Complex64) -> Complex64 {
        let mut p = ONE;
        let mut seen = false;
        for (z, q) in self.zeros.iter().zip(&self.poles) {
            if !seen && (z - k_m).norm() < 1e-12 * (1.0 + k_m.norm()) {
                seen = true;
                p /= k_m - q;
            } else {
                p *= (k_m - z) / (k_m - q);
            }
        }
        p
    }

    pub fn contains(&self, j: usize) -> bool {
        self.delta.binary_search(&j).is_ok()
    }
}

/// Rectangle in the open first quadrant searched for zeros of a.
#[derive(Debug, Clone, Copy)]
pub struct SearchBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl SearchBox {
    fn validate(&self) -> Result<()> {
        if !(self.re_min > 0.0
            && self.im_min > 0.0
            && self.re_max > self.re_min
            && self.im_max > self.im_min)
        {
            return Err(Error::Config(
                "search box must lie in the open first quadrant".into(),
            ));
        }
        Ok(())
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    fn contains(&self, k: Complex64, slack: f64) -> bool {
        k.re >= self.re_min - slack
            && k.re <= self.re_max + slack
            && k.im >= self.im_min - slack
            && k.im <= self.im_max + slack
    }

    fn diameter(&self) -> f64 {
        (self.re_max - self.re_min).hypot(self.im_max - self.im_min)
    }
}

/// Winding number of f around the box boundary, with adaptive edge
/// refinement until consecutive phase steps are below pi/2.
pub fn winding_number<F>(f: &mut F, bx: &SearchBox) -> Result<i64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let corners = [
        Complex64::new(bx.re_min, bx.im_min),
        Complex64::new(bx.re_max, bx.im_min),
        Complex64::new(bx.re_max, bx.im_max),
        Complex64::new(bx.re_min, bx.im_max),
        Complex64::new(bx.re_min, bx.im_min),
    ];
    let mut total = 0.0;
    for w in corners.windows(2) {
        total += edge_phase_change(f, w[0], w[1], 0)?;
    }
    let turns = total / (2.0 * PI);
    if (turns - turns.round()).abs() > 0.1 {
        return Err(Error::WindingMismatch {
            winding: turns.round() as i64,
            found: usize::MAX,
        });
    }
    Ok(turns.round() as i64)
}

fn edge_phase_change<F>(f: &mut F, a: Complex64, b: Complex64, depth: usize) -> Result<f64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    const INIT: usize = 8;
    let mut pts: Vec<Complex64> = (0..=INIT)
        .map(|i| a + (b - a) * (i as f64 / INIT as f64))
        .collect();
    let mut vals: Vec<Complex64> = Vec::with_capacity(pts.len());
    for &p in &pts {
        vals.push(f(p)?);
    }
    let mut total = 0.0;
    let mut i = 0;
    let mut guard = 0usize;
    while i + 1 < pts.len() {
        let dphi = (vals[i + 1] / vals[i]).arg();
        if dphi.abs() > PI / 2.0 && depth + guard < 48 {
            // refine this segment
            let mid = 0.5 * (pts[i] + pts[i + 1]);
            let vm = f(mid)?;
            pts.insert(i + 1, mid);
            vals.insert(i + 1, vm);
            guard += 1;
            continue;
        }
        total += dphi;
        i += 1;
    }
    Ok(total)
}

/// Find zeros of an analytic function in a first-quadrant box by recursive
/// winding subdivision followed by Newton refinement with a numerically
/// differentiated function.
pub fn find_zeros<F>(f: &mut F, bx: &SearchBox) -> Result<Vec<Complex64>>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    bx.validate()?;
    let expected = winding_number(f, bx)?;
    if expected < 0 {
        return Err(Error::WindingMismatch { winding: expected, found: 0 });
    }
    let mut zeros: Vec<Complex64> = Vec::new();
    subdivide(f, bx, expected, 0, &mut zeros)?;
    zeros.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    zeros.dedup_by(|a, b| (*a - *b).norm() < 1e-8);
    if zeros.len() as i64 != expected {
        return Err(Error::WindingMismatch { winding: expected, found: zeros.len() });
    }
    Ok(zeros)
}

fn subdivide<F>(
    f: &mut F,
    bx: &SearchBox,
    count: i64,
    depth: usize,
    zeros: &mut Vec<Complex64>,
) -> Result<()>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    if count == 0 {
        return Ok(());
    }
    if count == 1 || bx.diameter() < 1e-6 {
        if count > 1 {
            // cluster that refuses to separate
            return Err(Error::MultipleZero { k: bx.center(), abs_da: 0.0 });
        }
        let z = newton_refine(f, bx.center(), bx)?;
        zeros.push(z);
        return Ok(());
    }
    if depth > 40 {
        return Err(Error::WindingMismatch { winding: count, found: zeros.len() });
    }
    // split the longer side
    let (b1, b2) = if bx.re_max - bx.re_min >= bx.im_max - bx.im_min {
        let mid = 0.5 * (bx.re_min + bx.re_max);
        (
            SearchBox { re_max: mid, ..*bx },
            SearchBox { re_min: mid, ..*bx },
        )
    } else {
        let mid = 0.5 * (bx.im_min + bx.im_max);
        (
            SearchBox { im_max: mid, ..*bx },
            SearchBox { im_min: mid, ..*bx },
        )
    };
    let c1 = winding_number(f, &b1)?;
    let c2 = count - c1;
    subdivide(f, &b1, c1, depth + 1, zeros)?;
    subdivide(f, &b2, c2, depth + 1, zeros)?;
    Ok(())
}

fn numeric_derivative<F>(f: &mut F, k: Complex64) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let h = 1e-6 * (1.0 + k.norm());
    let fp = f(k + Complex64::new(h, 0.0))?;
    let fm = f(k - Complex64::new(h, 0.0))?;
    Ok((fp - fm) / (2.0 * h))
}

fn newton_refine<F>(f: &mut F, start: Complex64, bx: &SearchBox) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut k = start;
    let slack = 0.5 * bx.diameter();
    for _ in 0..60 {
        let v = f(k)?;
        if v.norm() < 1e-12 {
            break;
        }
        let d = numeric_derivative(f, k)?;
        if d.norm() < SIMPLE_TOL {
            return Err(Error::MultipleZero { k, abs_da: d.norm() });
        }
        let mut step = v / d;
        // keep Newton inside a sane neighbourhood
        let cap = 0.5 * bx.diameter().max(1e-3);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        k -= step;
        if !bx.contains(k, slack) {
            return Err(Error::WindingMismatch { winding: 1, found: 0 });
        }
    }
    let v = f(k)?;
    if v.norm() > 1e-10 {
        return Err(Error::WindingMismatch { winding: 1, found: 0 });
    }
    let d = numeric_derivative(f, k)?;
    if d.norm() < SIMPLE_TOL {
        return Err(Error::MultipleZero { k, abs_da: d.norm() });
    }
    Ok(k)
}

/// Locate the discrete spectrum of a potential inside a first-quadrant box
/// and extract the norming constants from the Jost-column connection
/// coefficient at each zero.
pub fn find_discrete_spectrum(
    sd: &ScatteringData,
    u: &SampledPotential,
    bx: &SearchBox,
) -> Result<SolitonEnsemble> {
    find_discrete_spectrum_with(sd, u, bx, &ScatterConfig::default())
}

pub fn find_discrete_spectrum_with(
    sd: &ScatteringData,
    u: &SampledPotential,
    bx: &SearchBox,
    cfg: &ScatterConfig,
) -> Result<SolitonEnsemble> {
    if sd.invariants.a_abs_min < cfg.a_floor {
        return Err(Error::SpectralSingularity {
            k: ZERO,
            abs_a: sd.invariants.a_abs_min,
        });
    }
    let pot = LaxPotential::prepare(u, cfg.decay_tol)?;
    let mut a_eval = |k: Complex64| wronskian_ab(&pot, k, cfg).map(|(a, _)| a);
    let zeros = find_zeros(&mut a_eval, bx)?;

    let grid = u.grid;
    // stations spread over the grid so a displaced soliton is still seen;
    // the least squares keeps only pairs where both columns are healthy
    // (far from the overlap region one side is exponentially amplified
    // integration noise)
    let i0 = grid.nearest(0.0);
    let n = grid.n_points;
    let mut stations: Vec<usize> = vec![
        n / 8,
        n / 4,
        (3 * n) / 8,
        i0.saturating_sub(16),
        i0,
        (i0 + 16).min(n - 1),
        (5 * n) / 8,
        (3 * n) / 4,
        (7 * n) / 8,
    ];
    stations.sort_unstable();
    stations.dedup();
    let mut pairs: Vec<(Complex64, Complex64)> = Vec::with_capacity(zeros.len());
    for &kj in &zeros {
        let da = numeric_derivative(&mut a_eval, kj)?;
        if da.norm() < SIMPLE_TOL {
            return Err(Error::MultipleZero { k: kj, abs_da: da.norm() });
        }
        // connection coefficient: omega_1^-(x, kj) = gamma e^{2i kj^2 x} omega_2^+(x, kj).
        // Away from the overlap region one column is exponentially
        // amplified integration noise, so the per-pair ratios are filtered
        // by consensus: the true gamma is the value that multiple healthy
        // pairs agree on, while polluted pairs scatter arbitrarily.
        let (cols_m, cols_p) = jost_columns_at(&pot, kj, &stations, cfg)?;
        let mut candidates: Vec<(Complex64, Complex64)> = Vec::new();
        for (si, &st) in stations.iter().enumerate() {
            let phase = (crate::mat2::I * 2.0 * kj * kj * grid.x(st)).exp();
            for comp in 0..2 {
                let w = phase * cols_p[si][comp];
                candidates.push((cols_m[si][comp], w));
            }
        }
        let usable: Vec<(Complex64, Complex64, Complex64)> = candidates
            .iter()
            .filter(|(v, w)| {
                v.norm() > 0.0 && w.norm() > 0.0 && v.is_finite() && w.is_finite()
            })
            .map(|&(v, w)| (v, w, v / w))
            .collect();
        if usable.is_empty() {
            return Err(Error::SingularSystem);
        }
        let agree = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-3 * a.norm().max(b.norm());
        let mut best_cluster: Vec<usize> = Vec::new();
        let mut best_score = -1.0_f64;
        for (i, &(_, _, ri)) in usable.iter().enumerate() {
            let members: Vec<usize> = usable
                .iter()
                .enumerate()
                .filter(|(_, &(_, _, rj))| agree(ri, rj))
                .map(|(j, _)| j)
                .collect();
            // prefer larger clusters; break ties by the best-balanced pair
            let balance = usable[i].0.norm().min(usable[i].1.norm())
                / usable[i].0.norm().max(usable[i].1.norm());
            let score = members.len() as f64 + balance;
            if score > best_score {
                best_score = score;
                best_cluster = members;
            }
        }
        let mut num = ZERO;
        let mut den = 0.0_f64;
        for &j in &best_cluster {
            let (v, w, _) = usable[j];
            num += w.conj() * v;
            den += w.norm_sqr();
        }
        if den == 0.0 {
            return Err(Error::SingularSystem);
        }
        let gamma = num / den;
        pairs.push((kj, gamma / da));
    }
    SolitonEnsemble::new(pairs)
}

/// Axis of a contour piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Real,
    Imag,
}

/// Signed contour piece for the delta exponential: the parameter interval
/// [lo, hi] on the given axis, entering with weight `sign`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContourPiece {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub sign: f64,
}

/// Jump log-density on the contour: log(1 + r(z) conj(r(zbar))).
/// On the real axis this is log(1 + |r|^2); on the imaginary axis the
/// oddness r(-z) = -r(z) makes it log(1 - |r|^2). Both are real, so the
/// principal branch needs no tracking.
fn jump_log(axis: Axis, r: Complex64) -> f64 {
    match axis {
        Axis::Real => (1.0 + r.norm_sqr()).ln(),
        Axis::Imag => (1.0 - r.norm_sqr()).ln(),
    }
}

/// exp[(1/(pi i)) * sum_pieces sign * int log(1 + r conj(r(conj .)))/(zeta - k) dzeta].
///
/// The reflection data is taken from the sampled contour of `sd` by linear
/// interpolation; segments are subdivided until the Cauchy kernel varies
/// slowly across each panel.
pub fn delta_exponential(
    sd: &ScatteringData,
    pieces: &[ContourPiece],
    k: Complex64,
) -> Result<Complex64> {
    let mut total = ZERO;
    for piece in pieces {
        total += piece.sign * cauchy_piece(sd, piece, k)?;
    }
    // 1/(pi i) = -i/pi
    Ok((total * Complex64::new(0.0, -1.0 / PI)).exp())
}

fn cauchy_piece(sd: &ScatteringData, piece: &ContourPiece, k: Complex64) -> Result<Complex64> {
    let (nodes, offset) = match piece.axis {
        Axis::Real => (&sd.contour.real_nodes, 0usize),
        Axis::Imag => (&sd.contour.imag_nodes, sd.contour.real_nodes.len()),
    };
    if piece.hi <= piece.lo {
        return Err(Error::Config("empty contour piece".into()));
    }
    // sample points: clipped nodes plus exact endpoints
    let mut ts: Vec<f64> = vec![piece.lo];
    ts.extend(nodes.iter().copied().filter(|&t| t > piece.lo && t < piece.hi));
    ts.push(piece.hi);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let zeta = |t: f64| match piece.axis {
        Axis::Real => Complex64::new(t, 0.0),
        Axis::Imag => Complex64::new(0.0, t),
    };
    // proximity guard: three local node spacings
    let spacing = if nodes.len() > 1 {
        nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    } else {
        piece.hi - piece.lo
    };
    let dist = ts
        .iter()
        .map(|&t| (zeta(t) - k).norm())
        .fold(f64::INFINITY, f64::min);
    if dist < 3.0 * spacing {
        return Err(Error::ContourProximity { dist });
    }

    // interpolated log-density at the sample points
    let interp = |t: f64| -> f64 {
        let pos = nodes.binary_search_by(|v| v.partial_cmp(&t).unwrap());
        let r = match pos {
            Ok(j) => sd.r_values[offset + j],
            Err(j) => {
                if j == 0 {
                    sd.r_values[offset]
                } else if j >= nodes.len() {
                    sd.r_values[offset + nodes.len() - 1]
                } else {
                    let w = (t - nodes[j - 1]) / (nodes[j] - nodes[j - 1]);
                    sd.r_values[offset + j - 1] * (1.0 - w) + sd.r_values[offset + j] * w
                }
            }
        };
        jump_log(piece.axis, r)
    };

    let mut sum = ZERO;
    for w in ts.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        // subdivide so the kernel varies slowly across each panel, then
        // Simpson on each sub-panel (r is piecewise linear between nodes,
        // so the kernel dominates the quadrature error)
        let seg_dist = (zeta(0.5 * (t0 + t1)) - k).norm();
        let nsub = (((t1 - t0) / (0.2 * seg_dist)).ceil() as usize).clamp(1, 32);
        for j in 0..nsub {
            let a = t0 + (t1 - t0) * j as f64 / nsub as f64;
            let b = t0 + (t1 - t0) * (j + 1) as f64 / nsub as f64;
            let m = 0.5 * (a + b);
            let ka = interp(a) / (zeta(a) - k);
            let km = interp(m) / (zeta(m) - k);
            let kb = interp(b) / (zeta(b) - k);
            let dz = zeta(b) - zeta(a);
            sum += dz / 6.0 * (ka + 4.0 * km + kb);
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{make_grid, SpectralContour};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quadrant_pole() -> Complex64 {
        Complex64::from_polar(1.0, PI / 4.0)
    }

    #[test]
    fn trace_formula_empty_is_one() {
        let e = SolitonEnsemble::empty();
        assert_eq!(trace_formula_a(&e, c(2.0, 3.0)).unwrap(), ONE);
    }

    #[test]
    fn trace_formula_single_pair() {
        // k1 = e^{i pi/4}: zeros at +-k1, a(k) = (k^2 - i)/(k^2 + i)
        let e = SolitonEnsemble::one(quadrant_pole(), ONE).unwrap();
        for k in [c(2.0, 0.0), c(0.3, 0.0), c(0.0, 1.7), c(1.0, 2.0)] {
            let a = trace_formula_a(&e, k).unwrap();
            let expect = (k * k - c(0.0, 1.0)) / (k * k + c(0.0, 1.0));
            assert!((a - expect).norm() < 1e-14);
        }
        // a(0) = -1, unimodular
        let a0 = trace_formula_a(&e, ZERO).unwrap();
        assert!((a0 + ONE).norm() < 1e-14);
        // a -> 1 at infinity
        let ainf = trace_formula_a(&e, c(1e8, 0.0)).unwrap();
        assert!((ainf - ONE).norm() < 1e-7);
    }

    #[test]
    fn trace_formula_unimodular_on_real_axis() {
        let e = SolitonEnsemble::new(vec![
            (c(0.7, 0.9), ONE),
            (c(1.4, 0.2), c(0.3, -1.0)),
        ])
        .unwrap();
        for i in 0..50 {
            let k = c(-5.0 + 0.2 * i as f64 + 0.1, 0.0);
            let a = trace_formula_a(&e, k).unwrap();
            assert!((a.norm() - 1.0).abs() < 1e-12, "|a| = {}", a.norm());
        }
    }

    #[test]
    fn trace_formula_pole_hit() {
        let e = SolitonEnsemble::one(quadrant_pole(), ONE).unwrap();
        assert!(matches!(
            trace_formula_a(&e, quadrant_pole().conj()),
            Err(Error::PoleHit(_))
        ));
    }

    #[test]
    fn blaschke_empty_and_full() {
        let e = SolitonEnsemble::new(vec![(c(0.8, 0.6), ONE), (c(1.1, 1.3), ONE)]).unwrap();
        let empty = blaschke_split(&e, &[]).unwrap();
        assert_eq!(empty.eval(c(2.0, 1.0)).unwrap(), ONE);
        let full = blaschke_split(&e, &[0, 1, 2, 3]).unwrap();
        for k in [c(2.0, 1.0), c(-0.3, 0.4), c(0.1, -2.0)] {
            let lhs = full.eval(k).unwrap();
            let rhs = trace_formula_a(&e, k).unwrap();
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn blaschke_product_identity() {
        let e = SolitonEnsemble::one(quadrant_pole(), ONE).unwrap();
        let d = blaschke_split(&e, &[0]).unwrap();
        let dc = blaschke_split(&e, &[1]).unwrap();
        // 20 spread-out probe points
        for i in 0..20 {
            let k = c(
                -3.0 + 0.35 * i as f64,
                2.5 * ((i as f64) * 0.7).sin(),
            );
            let prod = d.eval(k).unwrap() * dc.eval(k).unwrap();
            let a = trace_formula_a(&e, k).unwrap();
            assert!((prod - a).norm() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn winding_on_rational_oracle() {
        // planted zero structure of the trace formula
        let e = SolitonEnsemble::one(quadrant_pole(), ONE).unwrap();
        let mut f = |k: Complex64| trace_formula_a(&e, k);
        let bx = SearchBox { re_min: 0.2, re_max: 1.4, im_min: 0.2, im_max: 1.4 };
        assert_eq!(winding_number(&mut f, &bx).unwrap(), 1);
        let empty = SearchBox { re_min: 1.5, re_max: 2.5, im_min: 1.5, im_max: 2.5 };
        assert_eq!(winding_number(&mut f, &empty).unwrap(), 0);
    }

    #[test]
    fn find_zeros_recovers_planted_pole() {
        let e = SolitonEnsemble::one(quadrant_pole(), ONE).unwrap();
        let mut f = |k: Complex64| trace_formula_a(&e, k);
        let bx = SearchBox { re_min: 0.1, re_max: 1.6, im_min: 0.1, im_max: 1.6 };
        let zeros = find_zeros(&mut f, &bx).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0] - quadrant_pole()).norm() < 1e-10);
    }

    #[test]
    fn find_zeros_two_poles() {
        let e = SolitonEnsemble::new(vec![(c(0.6, 0.8), ONE), (c(1.2, 0.4), ONE)]).unwrap();
        let mut f = |k: Complex64| trace_formula_a(&e, k);
        let bx = SearchBox { re_min: 0.1, re_max: 1.8, im_min: 0.1, im_max: 1.5 };
        let zeros = find_zeros(&mut f, &bx).unwrap();
        assert_eq!(zeros.len(), 2);
        assert!((zeros[0] - c(0.6, 0.8)).norm() < 1e-10);
        assert!((zeros[1] - c(1.2, 0.4)).norm() < 1e-10);
    }

    fn synthetic_sd_on(
        contour: SpectralContour,
        rfun: impl Fn(Complex64) -> Complex64,
    ) -> ScatteringData {
        let pts = contour.points();
        let r_values: Vec<Complex64> = pts.iter().map(|&k| rfun(k)).collect();
        let a_values = vec![ONE; pts.len()];
        let b_values = r_values.clone();
        ScatteringData {
            contour,
            a_values,
            b_values,
            r_values,
            a0: ONE,
            discrete: SolitonEnsemble::empty(),
            invariants: Default::default(),
        }
    }

    fn synthetic_sd(rfun: impl Fn(Complex64) -> Complex64) -> ScatteringData {
        synthetic_sd_on(SpectralContour::uniform(0.05, 4.0, 120).unwrap(), rfun)
    }

    #[test]
    fn delta_exponential_zero_reflection() {
        let sd = synthetic_sd(|_| ZERO);
        let pieces = [ContourPiece { axis: Axis::Real, lo: -2.0, hi: 2.0, sign: 1.0 }];
        let v = delta_exponential(&sd, &pieces, c(0.7, 0.9)).unwrap();
        assert!((v - ONE).norm() < 1e-14);
    }

    #[test]
    fn delta_exponential_constant_r_closed_form() {
        // r = 0.5 on [1, 2], k = 3:
        // exp[(1/pi i) * ln(1.25) * int_1^2 dt/(t-3)] with the integral
        // equal to ln(1/2); the analytic antiderivative fixes the value.
        // node spacing 0.025 puts nodes exactly at t = 1 and t = 2, so
        // the sampled profile is a crisp rectangle on [1, 2]
        let contour = SpectralContour::uniform(0.05, 4.0, 159).unwrap();
        let sd = synthetic_sd_on(contour, |k| {
            if k.im == 0.0 && k.re > 0.9999 && k.re < 2.0001 {
                c(0.5, 0.0)
            } else {
                ZERO
            }
        });
        let pieces = [ContourPiece { axis: Axis::Real, lo: 1.0, hi: 2.0, sign: 1.0 }];
        let v = delta_exponential(&sd, &pieces, c(3.0, 0.0)).unwrap();
        let expect = (Complex64::new(0.0, -1.0 / PI) * 1.25_f64.ln() * 0.5_f64.ln()).exp();
        assert!((v - expect).norm() < 1e-8, "v = {v}, expect = {expect}");
    }

    #[test]
    fn delta_exponential_conjugation_symmetry() {
        // smooth synthetic r on the real axis
        let sd = synthetic_sd(|k| {
            if k.im == 0.0 {
                c(0.4, 0.0) * (-k.re * k.re / 4.0).exp() * k.re
            } else {
                ZERO
            }
        });
        let pieces = [ContourPiece { axis: Axis::Real, lo: -3.5, hi: 3.5, sign: 1.0 }];
        let k = c(0.8, 0.7);
        let v = delta_exponential(&sd, &pieces, k).unwrap();
        let vbar = delta_exponential(&sd, &pieces, k.conj()).unwrap();
        assert!((vbar * v.conj() - ONE).norm() < 1e-10);
    }

    #[test]
    fn delta_exponential_smooth_in_k() {
        let rfun = |t: f64| c(0.3, 0.1) * (-t * t / 2.0).exp() * t;
        let contour = SpectralContour::uniform(0.002, 4.0, 2000).unwrap();
        let sd = synthetic_sd_on(contour, |k| if k.im == 0.0 { rfun(k.re) } else { ZERO });
        let pieces = [ContourPiece { axis: Axis::Real, lo: -3.0, hi: 3.0, sign: 1.0 }];
        let k = c(1.0, 1.2);
        let h = 1e-5;
        let vp = delta_exponential(&sd, &pieces, k + c(h, 0.0)).unwrap();
        let vm = delta_exponential(&sd, &pieces, k - c(h, 0.0)).unwrap();
        let v0 = delta_exponential(&sd, &pieces, k).unwrap();
        let fd = (vp - vm) / (2.0 * h);
        // derivative of the exponent is (1/pi i) int f/(zeta - k)^2 dzeta;
        // fine trapezoid quadrature of that kernel as the independent route
        let n = 60000;
        let mut dexp = ZERO;
        for i in 0..n {
            let t0 = -3.0 + 6.0 * i as f64 / n as f64;
            let t1 = -3.0 + 6.0 * (i + 1) as f64 / n as f64;
            let f0 = (1.0 + rfun(t0).norm_sqr()).ln();
            let f1 = (1.0 + rfun(t1).norm_sqr()).ln();
            let k0 = f0 / ((c(t0, 0.0) - k) * (c(t0, 0.0) - k));
            let k1 = f1 / ((c(t1, 0.0) - k) * (c(t1, 0.0) - k));
            dexp += 0.5 * (t1 - t0) * (k0 + k1);
        }
        let deriv = v0 * dexp * Complex64::new(0.0, -1.0 / PI);
        assert!(
            (fd - deriv).norm() / fd.norm().max(1e-12) < 1e-4,
            "fd = {fd}, deriv = {deriv}"
        );
    }

    #[test]
    fn contour_proximity_guard() {
        let sd = synthetic_sd(|_| c(0.1, 0.0));
        let pieces = [ContourPiece { axis: Axis::Real, lo: -2.0, hi: 2.0, sign: 1.0 }];
        assert!(matches!(
            delta_exponential(&sd, &pieces, c(1.0, 1e-6)),
            Err(Error::ContourProximity { .. })
        ));
    }

    #[test]
    fn ensemble_json_round_trip() {
        let e = SolitonEnsemble::new(vec![(c(0.7, 0.7), c(1.0, 0.0)), (c(1.2, 0.3), c(0.2, -0.4))])
            .unwrap();
        let text = e.to_json();
        let back = SolitonEnsemble::from_json(&text).unwrap();
        assert_eq!(e, back);
        assert_eq!(back.expanded().len(), 4);
    }

    #[test]
    fn ensemble_rejects_wrong_quadrant() {
        assert!(SolitonEnsemble::one(c(-0.5, 0.5), ONE).is_err());
        assert!(SolitonEnsemble::one(c(0.5, -0.5), ONE).is_err());
    }

    #[test]
    fn spectrum_search_on_scattered_field() {
        // Wronskian-based search on a planted one-soliton potential is
        // exercised in the integration tests; here a cheap sanity check
        // that an empty box stays empty on a generic bump.
        let g = make_grid(-15.0, 15.0, 2048).unwrap();
        let u = SampledPotential::from_fn(g, |x| c(0.1 * (-x * x).exp(), 0.0));
        let contour = SpectralContour::geometric(0.1, 2.0, 8).unwrap();
        let sd = crate::scattering::scattering_coefficients(&u, &contour).unwrap();
        let bx = SearchBox { re_min: 0.4, re_max: 1.2, im_min: 0.4, im_max: 1.2 };
        let ens = find_discrete_spectrum(&sd, &u, &bx).unwrap();
        assert!(ens.is_empty());
    }
}

//! Hitting time `T_1` of level 1 for the 2-d Bessel process started at `x > 1`.
//!
//! The Laplace transform of `T_1` is classical:
//! `E_x[exp(-lambda T_1)] = K_0(x sqrt(2 lambda)) / K_0(sqrt(2 lambda))`.
//! With `z = sqrt(2 lambda)` and `a = x - 1` the Bromwich integral becomes an
//! integral over the vertical line `z = c + iy`, which is a parabola in the
//! `lambda` plane. Choosing `c = a/s` cancels the oscillating phase of
//! `exp(lambda s - a z)` exactly, leaving
//!
//! ```text
//! q_x(s) = (1/pi) exp(-a^2/2s) ∫_0^∞ exp(-s y^2/2) Re[z H(z)] dy,
//! H(z)   = e^{xz} K_0(xz) / (e^{z} K_0(z)),
//! ```
//!
//! a positive, non-oscillating Gaussian-weighted integral. The Gaussian factor
//! is extracted analytically, so `ln q` is available far below the `f64`
//! range. The distribution function uses the same contour with `F/lambda`.
//!
//! Close to the barrier (`a` small, `s >= a^2`) the transform is `1 - O(a)`
//! and the constant part, whose inverse vanishes for `s > 0`, dominates the
//! integrand. There `H(z)` is replaced by `H(z) - e^{az}`, evaluated as
//! `-z e^{az} ∫_1^x e^{-z(r-1)} K_1(zr) dr e^z / (e^z K_0(z))` so that
//! nothing cancels; the same form gives the survival function directly.

use crate::error::{require, HkError, Result};
use crate::quad::{self, GkOptions, QuadCfg};
use crate::specfun;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Upper limit of the scaled contour variable `u = y sqrt(s)`; the Gaussian
/// weight is below e^{-60} beyond it.
const CONTOUR_CUTOFF: f64 = 11.0;

fn check_xs(x: f64, s: f64, what: &str) -> Result<()> {
    require(x > 1.0, "starting point must exceed the barrier 1", x)?;
    require(s > 0.0, what, s)
}

/// Log of the constant-free two-regime profile of `q_x(s)`.
pub(crate) fn ln_q_profile(x: f64, s: f64) -> f64 {
    let a = x - 1.0;
    let gauss = -a * a / (2.0 * s);
    if s < 2.0 * x {
        a.ln() - 0.5 * x.ln() - 1.5 * s.ln() + gauss
    } else {
        a.ln() - x.ln() + x.ln().ln_1p() - (s + x).ln().ln_1p() - (s / x).ln_1p().ln_1p() - s.ln()
            + gauss
    }
}

/// Constant-free comparison profile for the hitting density:
/// `(x-1)/sqrt(x) s^{-3/2} e^{-(x-1)^2/2s}` for `s < 2x`, and
/// `(x-1)/x (1+ln x) / ((1+ln(s+x))(1+ln(1+s/x))) s^{-1} e^{-(x-1)^2/2s}` beyond.
pub fn q_estimate_profile(x: f64, s: f64) -> Result<f64> {
    check_xs(x, s, "time must be > 0")?;
    Ok(ln_q_profile(x, s).exp())
}

/// `1 ∧ ln x / ln(1 + sqrt t)`.
pub fn survival_estimate_profile(x: f64, t: f64) -> Result<f64> {
    check_xs(x, t, "time must be > 0")?;
    Ok((x.ln() / t.sqrt().ln_1p()).min(1.0))
}

/// `ln` of [`q_lower_bound`].
pub fn ln_q_lower_bound(x: f64, s: f64) -> Result<f64> {
    check_xs(x, s, "time must be > 0")?;
    let a = x - 1.0;
    Ok(a.ln() - 0.5 * (2.0 * PI * x).ln() - 1.5 * s.ln() - a * a / (2.0 * s))
}

/// Lower bound `(x-1)/sqrt(2 pi x) s^{-3/2} exp(-(x-1)^2/2s) <= q_x(s)`.
pub fn q_lower_bound(x: f64, s: f64) -> Result<f64> {
    ln_q_lower_bound(x, s).map(f64::exp)
}

/// `E_x[exp(-lambda T_1)] = K_0(x sqrt(2 lambda)) / K_0(sqrt(2 lambda))` for
/// complex `lambda` off the closed negative real axis.
pub fn laplace_transform(x: f64, lambda: Complex64) -> Result<Complex64> {
    require(x > 1.0, "starting point must exceed the barrier 1", x)?;
    if !(lambda.re.is_finite() && lambda.im.is_finite()) || (lambda.im == 0.0 && lambda.re <= 0.0) {
        return Err(HkError::Domain(format!("transform argument {lambda} is on the branch cut")));
    }
    let z = (2.0 * lambda).sqrt();
    let h = specfun::k0_scaled_c(x * z) / specfun::k0_scaled_c(z);
    Ok(h * (-(x - 1.0) * z).exp())
}

/// Below this gap `x - 1` (and for times `s >= (x-1)^2`) the contour
/// integrands drop the constant part of the transform.
const SMALL_GAP: f64 = 0.1;

fn drops_constant(a: f64, s: f64) -> bool {
    a <= SMALL_GAP && a * a <= s
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `(H(z) - e^{az}) / z` without cancellation for small `|az|`.
fn h_gap_over_z(x: f64, z: Complex64) -> Complex64 {
    let a = x - 1.0;
    let az = a * z;
    if az.norm() > 0.5 {
        return (h_ratio(x, z) - az.exp()) / z;
    }
    let mut g = Complex64::new(0.0, 0.0);
    for (node, w) in GL5 {
        let r = 1.0 + 0.5 * a * (node + 1.0);
        g += w * (-(z * (r - 1.0))).exp() * specfun::k01_scaled_c(z * r).1;
    }
    -az.exp() * (0.5 * a) * g / specfun::k0_scaled_c(z)
}

#[inline]
fn h_ratio(x: f64, z: Complex64) -> Complex64 {
    specfun::k0_scaled_c(x * z) / specfun::k0_scaled_c(z)
}

/// Breakpoints on `[0, CONTOUR_CUTOFF]`: `panels` uniform panels, refined
/// geometrically below the characteristic scales of the integrand.
fn contour_points(scales: &[f64], panels: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=panels)
        .map(|k| CONTOUR_CUTOFF * k as f64 / panels as f64)
        .collect();
    let smallest = scales
        .iter()
        .copied()
        .filter(|v| v.is_finite() && *v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if smallest < 1.0 {
        let mut p = (smallest / 8.0).max(1e-300);
        while p < 1.0 {
            pts.push(p);
            p *= 4.0;
        }
    }
    for &sc in scales {
        for m in [0.5, 1.0, 2.0] {
            let p = sc * m;
            if p > 0.0 && p < CONTOUR_CUTOFF {
                pts.push(p);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| (*b - *a).abs() <= 1e-12 * a.abs().max(1e-300));
    pts
}

fn inner_tol(cfg: &QuadCfg) -> f64 {
    (cfg.rel_tol * 1e-2).clamp(1e-13, 1e-9)
}

/// Single contour evaluation of `ln q_x(s)` with `panels` starting panels;
/// returns `(ln q, relative error estimate)`.
pub(crate) fn ln_q_contour(x: f64, s: f64, panels: usize, tol: f64, max_sub: usize) -> Result<(f64, f64)> {
    let a = x - 1.0;
    let c = a / s;
    let rs = s.sqrt();
    let inv_rs = 1.0 / rs;
    let gap = drops_constant(a, s);
    let f = |u: f64| {
        let z = Complex64::new(c, u * inv_rs);
        let zh = if gap { z * z * h_gap_over_z(x, z) } else { z * h_ratio(x, z) };
        (-0.5 * u * u).exp() * zh.re
    };
    let pts = contour_points(&[a * inv_rs, rs / x, rs], panels);
    let opts = GkOptions { rel_tol: tol, abs_tol: 0.0, max_subdivisions: max_sub, noise: 0.0 };
    let (integral, converged) = quad::integrate_best_effort(f, &pts, &opts);
    if !converged || !(integral.value > 0.0) {
        return Err(HkError::Quadrature { value: integral.value, abs_err: integral.abs_err });
    }
    let ln_q = -a * a / (2.0 * s) - PI.ln() - 0.5 * s.ln() + integral.value.ln();
    Ok((ln_q, integral.abs_err / integral.value))
}

/// `ln q_x(s)` together with its relative error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub ln_value: f64,
    pub rel_err: f64,
}

/// Log-form hitting density. Runs the contour inversion with `N` and `2N`
/// starting nodes and fails with [`HkError::Inversion`] if they disagree by
/// more than `cfg.rel_tol`.
pub fn ln_q_oracle(x: f64, s: f64, cfg: &QuadCfg) -> Result<LogValue> {
    check_xs(x, s, "time must be > 0")?;
    cfg.validate()?;
    let tol = inner_tol(cfg);
    let n = cfg.contour_nodes;
    let (l1, e1) = ln_q_contour(x, s, QuadCfg::panels(n), tol, cfg.max_subdivisions)?;
    let (l2, e2) = ln_q_contour(x, s, QuadCfg::panels(2 * n), tol, cfg.max_subdivisions)?;
    let diff = (l1 - l2).abs();
    if diff > cfg.rel_tol {
        return Err(HkError::Inversion { value_n: l1.exp(), value_2n: l2.exp() });
    }
    Ok(LogValue { ln_value: l2, rel_err: diff.max(e1).max(e2) })
}

/// Hitting density `q_x(s)` of `T_1`. Underflows to 0 where
/// [`ln_q_oracle`] is still finite.
pub fn q_oracle(x: f64, s: f64, cfg: &QuadCfg) -> Result<f64> {
    ln_q_oracle(x, s, cfg).map(|v| v.ln_value.exp())
}

/// `(P_x(T_1 <= t), absolute error)` from the inversion of `F(lambda)/lambda`.
fn hitting_cdf(x: f64, t: f64, panels: usize, tol: f64, max_sub: usize) -> Result<(f64, f64)> {
    let a = x - 1.0;
    let c = a / t;
    let rt = t.sqrt();
    let inv_rt = 1.0 / rt;
    let gauss = -a * a / (2.0 * t);
    if gauss < -745.0 {
        return Ok((0.0, 0.0));
    }
    let f = |u: f64| {
        let z = Complex64::new(c, u * inv_rt);
        (-0.5 * u * u).exp() * (h_ratio(x, z) / z).re
    };
    let pts = contour_points(&[a * inv_rt, rt / x, rt], panels);
    let opts = GkOptions { rel_tol: tol, abs_tol: 0.0, max_subdivisions: max_sub, noise: 0.0 };
    let (integral, converged) = quad::integrate_best_effort(f, &pts, &opts);
    if !converged || !integral.value.is_finite() {
        return Err(HkError::Quadrature { value: integral.value, abs_err: integral.abs_err });
    }
    let scale = 2.0 / PI * gauss.exp() * inv_rt;
    let cdf = scale * integral.value;
    Ok((cdf.clamp(0.0, 1.0), scale * integral.abs_err + 4.0 * f64::EPSILON))
}

/// `(P_x(T_1 > t), absolute error)`: `1 - cdf` away from the barrier, the
/// inversion of `(1 - F(lambda))/lambda` near it.
pub(crate) fn survival_contour(x: f64, t: f64, panels: usize, tol: f64, max_sub: usize) -> Result<(f64, f64)> {
    let a = x - 1.0;
    if !drops_constant(a, t) {
        let (cdf, err) = hitting_cdf(x, t, panels, tol, max_sub)?;
        return Ok((1.0 - cdf, err));
    }
    let rt = t.sqrt();
    let inv_rt = 1.0 / rt;
    let c = a / t;
    let f = |u: f64| {
        let z = Complex64::new(c, u * inv_rt);
        -(-0.5 * u * u).exp() * h_gap_over_z(x, z).re
    };
    let pts = contour_points(&[a * inv_rt, rt / x, rt], panels);
    let opts = GkOptions { rel_tol: tol, abs_tol: 0.0, max_subdivisions: max_sub, noise: 0.0 };
    let (integral, converged) = quad::integrate_best_effort(f, &pts, &opts);
    if !converged || !integral.value.is_finite() {
        return Err(HkError::Quadrature { value: integral.value, abs_err: integral.abs_err });
    }
    let scale = 2.0 / PI * (-a * a / (2.0 * t)).exp() * inv_rt;
    let surv = scale * integral.value;
    Ok((surv.clamp(0.0, 1.0), scale * integral.abs_err + 4.0 * f64::EPSILON * surv))
}

/// Survival function with its absolute error estimate.
pub fn survival_with_err(x: f64, t: f64, cfg: &QuadCfg) -> Result<(f64, f64)> {
    survival_contour(x, t, QuadCfg::panels(cfg.contour_nodes), inner_tol(cfg), cfg.max_subdivisions)
}

/// `P_x(T_1 > t)`.
pub fn survival_oracle(x: f64, t: f64, cfg: &QuadCfg) -> Result<f64> {
    check_xs(x, t, "time must be > 0")?;
    cfg.validate()?;
    survival_with_err(x, t, cfg).map(|(v, _)| v)
}


/// Chebyshev–Lobatto nodes per table panel, minus one.
const TABLE_DEGREE: usize = 16;
/// Target accuracy of the tabulated `ln q` (absolute in the log, i.e. relative
/// in `q`).
const TABLE_TOL: f64 = 1e-9;
const TABLE_MAX_DEPTH: u32 = 8;

struct TablePanel {
    lo: f64,
    hi: f64,
    vals: [f64; TABLE_DEGREE + 1],
}

impl TablePanel {
    fn node(lo: f64, hi: f64, j: usize) -> f64 {
        let c = (j as f64 * PI / TABLE_DEGREE as f64).cos();
        0.5 * (lo + hi) + 0.5 * (hi - lo) * c
    }

    /// Barycentric interpolation on Chebyshev points of the second kind.
    fn eval(&self, l: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=TABLE_DEGREE {
            let xj = Self::node(self.lo, self.hi, j);
            let d = l - xj;
            if d == 0.0 {
                return self.vals[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == TABLE_DEGREE {
                w *= 0.5;
            }
            num += w / d * self.vals[j];
            den += w / d;
        }
        num / den
    }
}

/// Hitting density for a fixed starting point `x`, tabulated on an interval
/// of times and evaluated directly outside it.
///
/// The table stores the smooth remainder
/// `r(l) = ln q_x(e^l) + (x-1)^2 / 2e^l + 3l/2` on piecewise Chebyshev panels
/// in `l = ln s`; panels are bisected until two off-node probes agree with
/// direct evaluation to `1e-9`.
pub struct DensityTable {
    x: f64,
    panels: Vec<TablePanel>,
    lo: f64,
    hi: f64,
    /// Largest deviation seen at the probes plus the largest node error.
    max_rel_err: f64,
    contour_panels: usize,
    tol: f64,
    max_sub: usize,
}

impl DensityTable {
    /// Direct evaluation without a table.
    pub fn direct(x: f64, cfg: &QuadCfg) -> Result<Self> {
        require(x > 1.0, "starting point must exceed the barrier 1", x)?;
        cfg.validate()?;
        Ok(DensityTable {
            x,
            panels: Vec::new(),
            lo: 0.0,
            hi: 0.0,
            max_rel_err: 0.0,
            contour_panels: QuadCfg::panels(cfg.contour_nodes),
            tol: inner_tol(cfg),
            max_sub: cfg.max_subdivisions,
        })
    }

    /// Tabulates `q_x` on `[s_lo, s_hi]`.
    pub fn build(x: f64, s_lo: f64, s_hi: f64, cfg: &QuadCfg) -> Result<Self> {
        let mut table = Self::direct(x, cfg)?;
        require(s_lo > 0.0, "table range must be positive", s_lo)?;
        require(s_hi > s_lo, "table range must be nonempty", s_hi)?;
        let lo = s_lo.ln();
        let hi = s_hi.ln();
        let n0 = ((hi - lo) / 2.0).ceil().max(1.0) as usize;
        let w = (hi - lo) / n0 as f64;
        let mut max_err = 0.0f64;
        for k in 0..n0 {
            let a = lo + w * k as f64;
            let b = if k + 1 == n0 { hi } else { a + w };
            table.build_panel(a, b, 0, &mut max_err)?;
        }
        table.lo = lo;
        table.hi = hi;
        table.max_rel_err = max_err;
        Ok(table)
    }

    fn remainder(&self, l: f64) -> Result<(f64, f64)> {
        let s = l.exp();
        let a = self.x - 1.0;
        let (lnq, err) = ln_q_contour(self.x, s, self.contour_panels, self.tol, self.max_sub)?;
        Ok((lnq + a * a / (2.0 * s) + 1.5 * l, err))
    }

    fn build_panel(&mut self, lo: f64, hi: f64, depth: u32, max_err: &mut f64) -> Result<()> {
        let mut vals = [0.0; TABLE_DEGREE + 1];
        let mut node_err = 0.0f64;
        for (j, v) in vals.iter_mut().enumerate() {
            let (r, e) = self.remainder(TablePanel::node(lo, hi, j))?;
            *v = r;
            node_err = node_err.max(e);
        }
        let panel = TablePanel { lo, hi, vals };
        // r is a difference of terms of size a^2/2s; their rounding is not
        // interpolation error
        let a = self.x - 1.0;
        let floor = 8.0 * f64::EPSILON * (a * a / (2.0 * lo.exp()) + lo.abs() + 10.0);
        let mut probe_err = 0.0f64;
        for frac in [0.31, 0.77] {
            let l = lo + frac * (hi - lo);
            let (r, e) = self.remainder(l)?;
            probe_err = probe_err.max((panel.eval(l) - r).abs() - floor);
            node_err = node_err.max(e);
        }
        if probe_err > TABLE_TOL && depth < TABLE_MAX_DEPTH {
            let mid = 0.5 * (lo + hi);
            self.build_panel(lo, mid, depth + 1, max_err)?;
            return self.build_panel(mid, hi, depth + 1, max_err);
        }
        *max_err = max_err.max(2.0 * probe_err + node_err);
        self.panels.push(panel);
        Ok(())
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    /// Largest estimated relative error of tabulated values.
    pub fn table_error(&self) -> f64 {
        self.max_rel_err
    }

    /// Relative accuracy to expect from [`Self::ln_q`] anywhere.
    pub fn noise(&self) -> f64 {
        self.max_rel_err.max(self.tol)
    }

    /// `(ln q_x(s), relative error estimate)`.
    pub fn ln_q(&self, s: f64) -> Result<(f64, f64)> {
        let l = s.ln();
        let a = self.x - 1.0;
        if !self.panels.is_empty() && l >= self.lo && l <= self.hi {
            let idx = self.panels.partition_point(|p| p.hi < l).min(self.panels.len() - 1);
            let r = self.panels[idx].eval(l);
            let lnq = r - a * a / (2.0 * s) - 1.5 * l;
            return Ok((lnq, self.max_rel_err + 4.0 * f64::EPSILON * lnq.abs()));
        }
        ln_q_contour(self.x, s, self.contour_panels, self.tol, self.max_sub)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_branches() {
        let v = q_estimate_profile(2.0, 1.0).unwrap();
        assert!((v - (-0.5f64).exp() / 2f64.sqrt()).abs() < 1e-15);
        let v = q_estimate_profile(2.0, 4.0).unwrap();
        let e = 0.5 * (1.0 + 2f64.ln()) / ((1.0 + 6f64.ln()) * (1.0 + 3f64.ln())) * 0.25 * (-0.125f64).exp();
        assert!((v / e - 1.0).abs() < 1e-14);
        let near = q_estimate_profile(1.0 + 1e-9, 3.0).unwrap();
        let nearer = q_estimate_profile(1.0 + 1e-10, 3.0).unwrap();
        assert!((near / nearer - 10.0).abs() < 1e-5);
    }

    #[test]
    fn survival_profile_values() {
        let e = std::f64::consts::E;
        assert!((survival_estimate_profile(e, (e - 1.0).powi(2)).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(survival_estimate_profile(1e6, 4.0).unwrap(), 1.0);
        let v = survival_estimate_profile(1.01, 1e8).unwrap();
        assert!((v - 1.01f64.ln() / 1e4f64.ln_1p()).abs() < 1e-16);
    }

    #[test]
    fn lower_bound_values() {
        let v = q_lower_bound(2.0, 1.0).unwrap();
        assert!((v - (-0.5f64).exp() / (2.0 * PI.sqrt())).abs() < 1e-15);
        let ln = ln_q_lower_bound(3.0, 0.01).unwrap();
        assert!(ln.is_finite() && ln < -190.0);
        assert!(q_lower_bound(1.0, 1.0).is_err());
        assert!(q_lower_bound(2.0, 0.0).is_err());
    }

    #[test]
    fn oracle_above_lower_bound_at_reference_point() {
        let cfg = QuadCfg::default();
        let q = q_oracle(2.0, 1.0, &cfg).unwrap();
        let lb = q_lower_bound(2.0, 1.0).unwrap();
        assert!(q >= lb);
        let r = q / q_estimate_profile(2.0, 1.0).unwrap();
        assert!((1.0 / 20.0..=20.0).contains(&r));
    }

    #[test]
    fn erfc_limit_of_cdf_contour() {
        // With H ≡ 1 the inversion must reproduce P(T <= t) = erfc(a / sqrt(2t)),
        // the one-dimensional first-passage law. Check the integrand transform.
        let a: f64 = 0.7;
        let t: f64 = 2.0;
        let c = a / t;
        let rt = t.sqrt();
        let f = |u: f64| {
            let z = Complex64::new(c, u / rt);
            (-0.5 * u * u).exp() * z.inv().re
        };
        let pts = contour_points(&[a / rt, rt], 4);
        let i = quad::integrate(f, &pts, &GkOptions::tight()).unwrap().value;
        let p = 2.0 / PI * (-a * a / (2.0 * t)).exp() / rt * i;
        // erfc(0.35) by series of erf
        let w: f64 = a / (2.0 * t).sqrt();
        let mut erf = 0.0;
        let mut term = w;
        for n in 0..60 {
            erf += term / (2 * n + 1) as f64;
            term *= -w * w / (n + 1) as f64;
        }
        erf *= 2.0 / PI.sqrt();
        assert!((p - (1.0 - erf)).abs() < 1e-12);
    }

    #[test]
    fn survival_limits() {
        let cfg = QuadCfg::default();
        assert!((survival_oracle(2.0, 1e-4, &cfg).unwrap() - 1.0).abs() < 1e-12);
        let s1 = survival_oracle(2.0, 1.0, &cfg).unwrap();
        let s2 = survival_oracle(2.0, 10.0, &cfg).unwrap();
        assert!(s1 > s2 && s2 > 0.0);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let cfg = QuadCfg::default();
        for x in [1.001, 2.0, 300.0] {
            let table = DensityTable::build(x, 1e-4, 1e5, &cfg).unwrap();
            assert!(table.table_error() < 1e-8, "x={x}: {}", table.table_error());
            for s in [1.3e-4, 0.02, 0.7, 3.3, 47.0, 999.0, 5e4, 2e5] {
                let (lt, _) = table.ln_q(s).unwrap();
                let direct = ln_q_oracle(x, s, &cfg).unwrap().ln_value;
                let tol = 1e-8 + 1e-15 * direct.abs();
                assert!((lt - direct).abs() < tol, "x={x} s={s}: {lt} vs {direct}");
            }
        }
    }

    #[test]
    fn gap_form_matches_plain_contour() {
        // at a moderate gap both integrands are accurate
        let x = 1.05;
        for s in [0.01, 1.0, 100.0] {
            assert!(drops_constant(x - 1.0, s));
            let (gap, _) = ln_q_contour(x, s, 3, 1e-12, 2000).unwrap();
            let a = x - 1.0;
            let f = |u: f64| {
                let z = Complex64::new(a / s, u / s.sqrt());
                (-0.5 * u * u).exp() * (z * h_ratio(x, z)).re
            };
            let opts = GkOptions { rel_tol: 1e-12, abs_tol: 0.0, max_subdivisions: 2000, noise: 0.0 };
            let plain = quad::integrate(f, &contour_points(&[a / s.sqrt(), s.sqrt() / x, s.sqrt()], 3), &opts).unwrap();
            let ln_plain = -a * a / (2.0 * s) - PI.ln() - 0.5 * s.ln() + plain.value.ln();
            assert!((gap - ln_plain).abs() < 1e-8, "s={s}: {gap} vs {ln_plain}");
            let (surv, _) = survival_contour(x, s, 3, 1e-12, 2000).unwrap();
            let (cdf, _) = hitting_cdf(x, s, 3, 1e-12, 2000).unwrap();
            assert!((surv - (1.0 - cdf)).abs() < 1e-10, "s={s}: {surv} vs {}", 1.0 - cdf);
        }
    }

    #[test]
    fn transform_rejects_cut() {
        assert!(laplace_transform(2.0, Complex64::new(-1.0, 0.0)).is_err());
        let v = laplace_transform(2.0, Complex64::new(1.0, 0.0)).unwrap();
        let k = specfun::bessel_k0(2.0 * 2f64.sqrt()).unwrap() / specfun::bessel_k0(2f64.sqrt()).unwrap();
        assert!((v.re - k).abs() < 1e-12 && v.im == 0.0);
    }
}

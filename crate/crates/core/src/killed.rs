//! Transition density of the 2-d Bessel process killed at level 1.
//!
//! The density is computed from the last-exit decomposition
//!
//! ```text
//! p_1(t, x, y) = p(t, x, y) - ∫_0^t q_x(s) p(t - s, 1, y) ds
//! ```
//!
//! in the normalised form `p_1 = p (1 - rho)`, with `rho` integrated over the
//! logistic variable `s = t / (1 + e^{-v})`, which resolves both endpoints.
//! When `rho` is close to 1 (one point near the barrier relative to
//! `sqrt t`) the subtraction is reorganised as
//!
//! ```text
//! p_1 = [p(t, x, y) - p(t, 1, y)] + P_x(T_1 > t) p(t, 1, y)
//!       + ∫_0^t q_x(s) [p(t, 1, y) - p(t - s, 1, y)] ds
//! ```
//!
//! whose terms are all of the order of `p_1` rather than `p`. Every value
//! carries an error bound assembled from the quadrature and inversion error
//! estimates.

use crate::error::{require, HkError, Result};
use crate::hitting::{self, DensityTable};
use crate::kernels::ln_p0;
use crate::quad::{self, GkOptions, QuadCfg};
use crate::specfun;
use std::cell::Cell;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Above this value of `2(x-1)(y-1)/t` the correction term is below
/// `e^{-200}` relative to `p` and is dropped.
const REFLECTION_CUTOFF: f64 = 200.0;
/// Use the compensated form when `min(x, y) - 1 < NEAR_BARRIER * sqrt(t)`.
const NEAR_BARRIER: f64 = 1e-4;
/// Use the compensated form when `1 - rho` falls below this.
const DIRECT_MIN_MARGIN: f64 = 0.05;
const SCAN_HALF_WIDTH: f64 = 70.0;
const SCAN_STEP: f64 = 0.25;
/// Parts of the integrand more than this many nats below its peak are
/// dropped; the proxy used to locate them is accurate to a few nats.
const WINDOW_NATS: f64 = 60.0;
/// The barrier-side form is used only when it is at least this accurate.
const BARRIER_SIDE_MAX_REL: f64 = 1e-6;

/// A kernel value with its natural logarithm and error bounds. `ln_value`
/// and `rel_error` stay meaningful when `value` underflows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub ln_value: f64,
    /// Absolute error bound on `value`.
    pub error_bound: f64,
    /// Relative error bound, `error_bound / value`.
    pub rel_error: f64,
}

impl KernelValue {
    pub(crate) fn from_log(ln_value: f64, rel_error: f64) -> Self {
        let value = ln_value.exp();
        KernelValue { value, ln_value, error_bound: value * rel_error, rel_error }
    }

    /// The same value multiplied by `e^{ln_factor}`.
    pub(crate) fn scaled(&self, ln_factor: f64) -> Self {
        Self::from_log(self.ln_value + ln_factor, self.rel_error)
    }
}

#[inline]
fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// Breakpoints in the logistic variable covering the part of an integrand
/// whose log-magnitude (approximated by `proxy`) lies within
/// [`WINDOW_NATS`] of its maximum. `None` if the proxy is `-inf` everywhere.
fn scan_window<F: Fn(f64) -> f64>(proxy: F) -> Option<Vec<f64>> {
    let n = (2.0 * SCAN_HALF_WIDTH / SCAN_STEP) as usize;
    let grid: Vec<f64> = (0..=n).map(|k| -SCAN_HALF_WIDTH + SCAN_STEP * k as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&v| proxy(v)).collect();
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if vmax == f64::NEG_INFINITY {
        return None;
    }
    let keep = |v: f64| v >= vmax - WINDOW_NATS;
    let first = vals.iter().position(|&v| keep(v)).unwrap_or(imax);
    let last = vals.iter().rposition(|&v| keep(v)).unwrap_or(imax);
    let lo = grid[first.saturating_sub(1)];
    let hi = grid[(last + 1).min(n)];
    let peak = grid[imax];
    let width = if imax > 0 && imax < n {
        let c2 = (vals[imax + 1] - 2.0 * vmax + vals[imax - 1]) / (SCAN_STEP * SCAN_STEP);
        if c2 < 0.0 && c2.is_finite() {
            (1.0 / (-c2).sqrt()).clamp(0.01, 2.0)
        } else {
            1.0
        }
    } else {
        1.0
    };
    let mut pts = vec![lo, hi];
    if peak > lo && peak < hi {
        pts.push(peak);
    }
    let mut d = width;
    while d < hi - lo {
        for p in [peak - d, peak + d] {
            if p > lo && p < hi {
                pts.push(p);
            }
        }
        d *= 3.0;
    }
    let mut v = lo + 2.0;
    while v < hi {
        pts.push(v);
        v += 2.0;
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|b, a| (*b - *a).abs() < 1e-9);
    Some(pts)
}

/// `ln p(tau, 1, y) - ln p(t, 1, y)` without cancellation for `tau` close to
/// `t`; `s = t - tau`, `ln_tau_over_t = ln(tau / t)`.
fn ln_p_time_shift(t: f64, s: f64, tau: f64, ln_tau_over_t: f64, y: f64) -> f64 {
    let b = y - 1.0;
    -ln_tau_over_t - 0.5 * b * b * s / (tau * t)
        + specfun::ln_i_nu_scaled_unchecked(0.0, y / tau)
        - specfun::ln_i_nu_scaled_unchecked(0.0, y / t)
}

/// `ln(e^{-z1} I_0(z1)) - ln(e^{-z0} I_0(z0))`, accurate when `z1` is close
/// to `z0`: the integral of `I_1/I_0 - 1` by three-point Gauss-Legendre when
/// the interval is short, plain subtraction otherwise.
fn ln_i0_scaled_diff(z0: f64, z1: f64) -> f64 {
    let h = z1 - z0;
    if h.abs() > 1e-2 * (1.0 + z0.abs()) {
        return specfun::ln_i_nu_scaled_unchecked(0.0, z1) - specfun::ln_i_nu_scaled_unchecked(0.0, z0);
    }
    let g = |z: f64| specfun::i1_scaled(z) / specfun::i0_scaled(z) - 1.0;
    let m = 0.5 * (z0 + z1);
    let r = 0.5 * h * (0.6f64).sqrt();
    0.5 * h * (5.0 * g(m - r) + 8.0 * g(m) + 5.0 * g(m + r)) / 9.0
}

fn check_killed_args(t: f64, x: f64, y: f64) -> Result<()> {
    require(t > 0.0, "t must be > 0", t)?;
    require(x > 1.0, "x must exceed the barrier 1", x)?;
    require(y > 1.0, "y must exceed the barrier 1", y)
}

/// Evaluator for the killed kernel, optionally holding tabulated hitting
/// densities for a set of starting points.
pub struct HuntEvaluator {
    cfg: QuadCfg,
    tables: BTreeMap<u64, DensityTable>,
}

impl HuntEvaluator {
    /// Evaluator that inverts the hitting-time transform on demand.
    pub fn new(cfg: &QuadCfg) -> Result<Self> {
        cfg.validate()?;
        Ok(HuntEvaluator { cfg: *cfg, tables: BTreeMap::new() })
    }

    /// Evaluator with hitting densities tabulated for every starting point in
    /// `starts` on the times relevant to horizons up to `t_max`.
    pub fn with_tables(cfg: &QuadCfg, starts: &[f64], t_max: f64) -> Result<Self> {
        let mut ev = Self::new(cfg)?;
        let mut uniq: Vec<f64> = starts.iter().copied().filter(|&x| x > 1.0).collect();
        uniq.sort_by(f64::total_cmp);
        uniq.dedup();
        let built = crate::par::map(&uniq, |&x| {
            let a = x - 1.0;
            let s_lo = (a * a / 2000.0).max(1e-14 * t_max);
            if s_lo >= t_max {
                DensityTable::direct(x, cfg)
            } else {
                DensityTable::build(x, s_lo, t_max, cfg)
            }
        });
        for (x, table) in uniq.iter().zip(built) {
            ev.tables.insert(x.to_bits(), table?);
        }
        Ok(ev)
    }

    pub fn cfg(&self) -> &QuadCfg {
        &self.cfg
    }

    fn with_density<R>(&self, x: f64, f: impl FnOnce(&DensityTable) -> Result<R>) -> Result<R> {
        match self.tables.get(&x.to_bits()) {
            Some(t) => f(t),
            None => f(&DensityTable::direct(x, &self.cfg)?),
        }
    }

    /// `(ln q_x(s), relative error)`, from the table for `x` when there is one.
    pub fn ln_q(&self, x: f64, s: f64) -> Result<(f64, f64)> {
        require(x > 1.0, "starting point must exceed the barrier 1", x)?;
        require(s > 0.0, "time must be > 0", s)?;
        self.with_density(x, |d| d.ln_q(s))
    }

    /// Killed kernel `p_1(t, x, y)` with respect to `y dy`.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> Result<KernelValue> {
        check_killed_args(t, x, y)?;
        let ln_p = ln_p0(t, x, y);
        let e = 2.0 * (x - 1.0) * (y - 1.0) / t;
        if e > REFLECTION_CUTOFF {
            let neglected = (-e + (x * y + 2.0).ln() + 10.0).exp();
            return Ok(KernelValue::from_log(ln_p, neglected + 16.0 * f64::EPSILON * (1.0 + ln_p.abs())));
        }
        let near = x.min(y) - 1.0 < NEAR_BARRIER * t.sqrt();
        if !near {
            match self.direct(t, x, y, ln_p) {
                Ok((margin, err)) if margin >= DIRECT_MIN_MARGIN => {
                    let rel = err / margin + 16.0 * f64::EPSILON * (1.0 + ln_p.abs());
                    return Ok(KernelValue::from_log(ln_p + margin.ln(), rel));
                }
                Ok(_) => {}
                Err(HkError::Quadrature { .. }) => {}
                Err(err) => return Err(err),
            }
        }
        // the compensated form needs the density from the nearer point; when
        // only the other point is tabulated, try the barrier-side form first
        let (near_pt, far_pt) = if x <= y { (x, y) } else { (y, x) };
        if !self.has_table(near_pt) && self.has_table(far_pt) {
            if let Ok(v) = self.barrier_side(t, far_pt, near_pt) {
                if v.rel_error <= BARRIER_SIDE_MAX_REL {
                    return Ok(v);
                }
            }
        }
        self.compensated(t, x, y)
    }

    fn has_table(&self, x: f64) -> bool {
        self.tables.contains_key(&x.to_bits())
    }

    /// Form anchored at the barrier, for `y` close to 1:
    /// since `p_1(t, x, 1) = 0`,
    ///
    /// ```text
    /// p_1(t, x, y) = [p(t, x, y) - p(t, x, 1)] - ∫_0^t q_x(s) [p(t-s, 1, y) - p(t-s, 1, 1)] ds
    /// ```
    ///
    /// Both terms are `O(y - 1)`, and only the density from `x` is needed.
    fn barrier_side(&self, t: f64, x: f64, y: f64) -> Result<KernelValue> {
        let b = y - 1.0;
        let ln_t = t.ln();
        let ln_pb = ln_p0(t, x, 1.0);
        // p(t, x, y) / p(t, x, 1) - 1
        let delta = -b * (y + 1.0 - 2.0 * x) / (2.0 * t) + ln_i0_scaled_diff(x / t, x * y / t);
        let d = delta.exp_m1();
        let d_err = 8.0 * f64::EPSILON * (d.abs() + delta.abs());

        // ln p(tau, 1, y) - ln p(tau, 1, 1)
        let shift = |tau: f64| -b * b / (2.0 * tau) + ln_i0_scaled_diff(1.0 / tau, y / tau);
        let ln_w = |v: f64, ln_q: f64| {
            let ln_s = ln_t - softplus(-v);
            let ln_tau = ln_t - softplus(v);
            ln_q + ln_p0(ln_tau.exp(), 1.0, 1.0) - ln_pb + ln_s + ln_tau - ln_t
        };
        let proxy = |v: f64| {
            let ln_s = ln_t - softplus(-v);
            let tau = (ln_t - softplus(v)).exp();
            ln_w(v, hitting::ln_q_profile(x, ln_s.exp())) + shift(tau).exp_m1().abs().ln()
        };
        let (j, j_err) = match scan_window(proxy) {
            None => (0.0, 0.0),
            Some(pts) => self.with_density(x, |dens| {
                let failure = Cell::new(None);
                let q_err = Cell::new(0.0f64);
                let f = |v: f64| {
                    let ln_s = ln_t - softplus(-v);
                    let tau = (ln_t - softplus(v)).exp();
                    match dens.ln_q(ln_s.exp()) {
                        Ok((lq, e)) => {
                            q_err.set(q_err.get().max(e));
                            ln_w(v, lq).exp() * shift(tau).exp_m1()
                        }
                        Err(err) => {
                            failure.set(Some(err));
                            f64::NAN
                        }
                    }
                };
                let opts = GkOptions {
                    rel_tol: self.cfg.rel_tol * 1e-3,
                    abs_tol: 0.0,
                    max_subdivisions: self.cfg.max_subdivisions,
                    noise: dens.noise(),
                };
                let (ji, ok) = quad::integrate_best_effort(f, &pts, &opts);
                if let Some(err) = failure.take() {
                    return Err(err);
                }
                if !ok {
                    return Err(HkError::Quadrature { value: ji.value, abs_err: ji.abs_err });
                }
                Ok((ji.value, ji.abs_err + ji.abs_value * q_err.get()))
            })?,
        };

        let ratio = d - j;
        let err = d_err + j_err + 4.0 * f64::EPSILON * (d.abs() + j.abs());
        if !(ratio > err) {
            let upper = (ln_pb.exp() * (ratio.max(0.0) + err)).max(f64::MIN_POSITIVE);
            return Err(HkError::Cancellation { upper });
        }
        let rel = err / ratio + 8.0 * f64::EPSILON * (1.0 + ln_pb.abs());
        Ok(KernelValue::from_log(ln_pb + ratio.ln(), rel))
    }

    /// `(1 - rho, absolute error of rho)` for the plain last-exit form.
    fn direct(&self, t: f64, x: f64, y: f64, ln_p: f64) -> Result<(f64, f64)> {
        let ln_t = t.ln();
        let proxy = |v: f64| {
            let ln_s = ln_t - softplus(-v);
            let ln_tau = ln_t - softplus(v);
            hitting::ln_q_profile(x, ln_s.exp()) + ln_p0(ln_tau.exp(), 1.0, y) - ln_p + ln_s + ln_tau - ln_t
        };
        let Some(pts) = scan_window(proxy) else {
            return Ok((1.0, 0.0));
        };
        self.with_density(x, |dens| {
            let failure = Cell::new(None);
            let q_err = Cell::new(0.0f64);
            let f = |v: f64| {
                let ln_s = ln_t - softplus(-v);
                let ln_tau = ln_t - softplus(v);
                match dens.ln_q(ln_s.exp()) {
                    Ok((lq, e)) => {
                        q_err.set(q_err.get().max(e));
                        (lq + ln_p0(ln_tau.exp(), 1.0, y) - ln_p + ln_s + ln_tau - ln_t).exp()
                    }
                    Err(err) => {
                        failure.set(Some(err));
                        f64::NAN
                    }
                }
            };
            let opts = GkOptions {
                rel_tol: self.cfg.rel_tol * 0.1,
                abs_tol: self.cfg.rel_tol * 1e-3,
                max_subdivisions: self.cfg.max_subdivisions,
                noise: dens.noise(),
            };
            let (rho, ok) = quad::integrate_best_effort(f, &pts, &opts);
            if let Some(err) = failure.take() {
                return Err(err);
            }
            if !ok {
                return Err(HkError::Quadrature { value: rho.value, abs_err: rho.abs_err });
            }
            let err = rho.abs_err + rho.abs_value * q_err.get();
            Ok((1.0 - rho.value, err))
        })
    }

    /// Compensated form started from the point closer to the barrier.
    fn compensated(&self, t: f64, x: f64, y: f64) -> Result<KernelValue> {
        let (x0, y0) = if x <= y { (x, y) } else { (y, x) };
        let a0 = x0 - 1.0;
        let ln_t = t.ln();
        let ln_p1 = ln_p0(t, 1.0, y0);

        // p(t, x0, y0) / p(t, 1, y0) - 1
        let delta = a0 * (2.0 * y0 - x0 - 1.0) / (2.0 * t)
            + specfun::ln_i_nu_scaled_unchecked(0.0, x0 * y0 / t)
            - specfun::ln_i_nu_scaled_unchecked(0.0, y0 / t);
        let d = delta.exp_m1();
        let d_err = 8.0 * f64::EPSILON * (1.0 + d.abs()) * (1.0 + delta.abs());

        let (surv, cdf_err) = hitting::survival_contour(
            x0,
            t,
            QuadCfg::panels(self.cfg.contour_nodes),
            1e-13,
            self.cfg.max_subdivisions,
        )?;

        let bracket = |v: f64| -> f64 {
            let ln_s = ln_t - softplus(-v);
            let ln_tau_over_t = -softplus(v);
            let s = ln_s.exp();
            let tau = (ln_t + ln_tau_over_t).exp();
            -ln_p_time_shift(t, s, tau, ln_tau_over_t, y0).exp_m1()
        };
        let proxy = |v: f64| {
            let ln_s = ln_t - softplus(-v);
            let ln_jac = ln_s - softplus(v);
            hitting::ln_q_profile(x0, ln_s.exp()) + bracket(v).abs().ln() + ln_jac
        };
        let (j, j_err) = match scan_window(proxy) {
            None => (0.0, 0.0),
            Some(pts) => self.with_density(x0, |dens| {
                let failure = Cell::new(None);
                let q_err = Cell::new(0.0f64);
                let f = |v: f64| {
                    let ln_s = ln_t - softplus(-v);
                    let ln_jac = ln_s - softplus(v);
                    match dens.ln_q(ln_s.exp()) {
                        Ok((lq, e)) => {
                            q_err.set(q_err.get().max(e));
                            (lq + ln_jac).exp() * bracket(v)
                        }
                        Err(err) => {
                            failure.set(Some(err));
                            f64::NAN
                        }
                    }
                };
                let opts = GkOptions {
                    rel_tol: self.cfg.rel_tol * 1e-3,
                    abs_tol: 1e-15 * (surv + d.abs()),
                    max_subdivisions: self.cfg.max_subdivisions,
                    noise: dens.noise(),
                };
                let (ji, ok) = quad::integrate_best_effort(f, &pts, &opts);
                if let Some(err) = failure.take() {
                    return Err(err);
                }
                if !ok {
                    return Err(HkError::Quadrature { value: ji.value, abs_err: ji.abs_err });
                }
                Ok((ji.value, ji.abs_err + ji.abs_value * q_err.get()))
            })?,
        };

        let ratio = d + surv + j;
        let rounding = 4.0 * f64::EPSILON * (d.abs() + surv + j.abs());
        let ratio_err = d_err + cdf_err + j_err + rounding;
        if !(ratio > ratio_err) {
            let upper = (ln_p1.exp() * (ratio.max(0.0) + ratio_err)).max(f64::MIN_POSITIVE);
            return Err(HkError::Cancellation { upper });
        }
        let rel = ratio_err / ratio + 8.0 * f64::EPSILON * (1.0 + ln_p1.abs());
        Ok(KernelValue::from_log(ln_p1 + ratio.ln(), rel))
    }
}

/// Killed kernel `p_1(t, x, y)` of the 2-d Bessel process, with respect to
/// `y dy`, from the last-exit decomposition.
pub fn killed_kernel(t: f64, x: f64, y: f64, cfg: &QuadCfg) -> Result<KernelValue> {
    HuntEvaluator::new(cfg)?.eval(t, x, y)
}

/// Exact killed kernel of the 3-d Bessel process (index 1/2) with respect to
/// `y^2 dy`: `(2 pi t)^{-1/2} (xy)^{-1} (e^{-(x-y)^2/2t} - e^{-(x+y-2)^2/2t})`.
pub fn killed_kernel_mu_half(t: f64, x: f64, y: f64) -> Result<f64> {
    check_killed_args(t, x, y)?;
    let d = x - y;
    let e = 2.0 * (x - 1.0) * (y - 1.0) / t;
    Ok((-d * d / (2.0 * t)).exp() * -(-e).exp_m1() / ((2.0 * PI * t).sqrt() * x * y))
}

/// `ln` of [`killed_kernel_mu_half`].
pub fn ln_killed_kernel_mu_half(t: f64, x: f64, y: f64) -> Result<f64> {
    check_killed_args(t, x, y)?;
    let d = x - y;
    let e = 2.0 * (x - 1.0) * (y - 1.0) / t;
    Ok(-d * d / (2.0 * t) + (-(-e).exp_m1()).ln() - 0.5 * (2.0 * PI * t).ln() - (x * y).ln())
}

fn check_scaled_args(a: f64, t: f64, x: f64, y: f64) -> Result<()> {
    require(a > 0.0, "barrier must be > 0", a)?;
    require(t > 0.0, "t must be > 0", t)?;
    if !(x.is_finite() && x > a && y.is_finite() && y > a) {
        return Err(HkError::Domain(format!("x = {x}, y = {y} must exceed the barrier {a}")));
    }
    Ok(())
}

/// Killed kernel for the barrier `a`, with respect to `y dy`, by Brownian
/// scaling: `p_a(t, x, y) = a^{-2} p_1(t/a^2, x/a, y/a)`.
pub fn killed_kernel_scaled(a: f64, t: f64, x: f64, y: f64, cfg: &QuadCfg) -> Result<KernelValue> {
    check_scaled_args(a, t, x, y)?;
    let v = killed_kernel(t / (a * a), x / a, y / a, cfg)?;
    if a == 1.0 {
        return Ok(v);
    }
    Ok(v.scaled(-2.0 * a.ln()))
}

/// Killed kernel for the barrier `a` evaluated without rescaling the
/// arguments: `p(t,x,y) - ∫ q_{x,a}(s) p(t-s, a, y) ds` with
/// `q_{x,a}(s) = a^{-2} q_{x/a}(s/a^2)`. Intended as a cross-check of
/// [`killed_kernel_scaled`]; it has no near-barrier compensation.
pub fn killed_kernel_scaled_direct(a: f64, t: f64, x: f64, y: f64, cfg: &QuadCfg) -> Result<KernelValue> {
    check_scaled_args(a, t, x, y)?;
    cfg.validate()?;
    let dens = DensityTable::direct(x / a, cfg)?;
    let ln_p = ln_p0(t, x, y);
    let a2 = a * a;
    let ln_q = |s: f64| dens.ln_q(s / a2).map(|(l, e)| (l - a2.ln(), e));
    let failure = Cell::new(None);
    let q_err = Cell::new(0.0f64);
    let f = |s: f64| match ln_q(s) {
        Ok((lq, e)) => {
            q_err.set(q_err.get().max(e));
            (lq + ln_p0(t - s, a, y) - ln_p).exp()
        }
        Err(err) => {
            failure.set(Some(err));
            f64::NAN
        }
    };
    // breakpoints clustered geometrically towards both endpoints
    let mut pts = vec![0.0, 0.5 * t, t];
    let mut h = 0.25 * t;
    while h > t * 1e-12 {
        pts.push(h);
        pts.push(t - h);
        h *= 0.25;
    }
    pts.sort_by(f64::total_cmp);
    let opts = GkOptions {
        rel_tol: cfg.rel_tol * 0.1,
        abs_tol: cfg.rel_tol * 1e-3,
        max_subdivisions: cfg.max_subdivisions,
        noise: dens.noise(),
    };
    let (rho, ok) = quad::integrate_best_effort(f, &pts, &opts);
    if let Some(err) = failure.take() {
        return Err(err);
    }
    if !ok {
        return Err(HkError::Quadrature { value: rho.value, abs_err: rho.abs_err });
    }
    let margin = 1.0 - rho.value;
    let err = rho.abs_err + rho.abs_value * q_err.get();
    if !(margin > err) {
        return Err(HkError::Cancellation { upper: ln_p.exp() * (margin.max(0.0) + err) });
    }
    Ok(KernelValue::from_log(ln_p + margin.ln(), err / margin + 16.0 * f64::EPSILON * (1.0 + ln_p.abs())))
}

/// Bounds from the comparison with the index-1/2 kernel:
/// `lower = (xy)^{1/2} p_1^{(1/2)}(t, x, y) <= p_1(t, x, y)` always, and
/// `p_1 <= e^{1/2} lower` for `t <= 4` (`upper` is `None` otherwise).
pub fn sandwich_bounds(t: f64, x: f64, y: f64) -> Result<(f64, Option<f64>)> {
    let lower = (x * y).sqrt() * killed_kernel_mu_half(t, x, y)?;
    let upper = (t <= 4.0).then(|| 0.5f64.exp() * lower);
    Ok((lower, upper))
}

/// `ln` of the sandwich lower bound.
pub(crate) fn ln_sandwich_lower(t: f64, x: f64, y: f64) -> Result<f64> {
    Ok(0.5 * (x * y).ln() + ln_killed_kernel_mu_half(t, x, y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::free_kernel;

    #[test]
    fn image_kernel_values() {
        let v = killed_kernel_mu_half(1.0, 2.0, 2.0).unwrap();
        let expected = 0.25 * (1.0 - (-2.0f64).exp()) / (2.0 * PI).sqrt();
        assert!((v / expected - 1.0).abs() < 1e-14);
        let a = killed_kernel_mu_half(1.0, 1.0 + 1e-6, 2.0).unwrap();
        let b = killed_kernel_mu_half(1.0, 1.0 + 2e-6, 2.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-5);
        let ln = ln_killed_kernel_mu_half(1.0, 2.0, 2.0).unwrap();
        assert!((ln - expected.ln()).abs() < 1e-14);
    }

    #[test]
    fn sandwich_shape() {
        let (lo, up) = sandwich_bounds(1.0, 2.0, 3.0).unwrap();
        assert!((up.unwrap() / lo - 0.5f64.exp()).abs() < 1e-15);
        assert!(sandwich_bounds(100.0, 2.0, 3.0).unwrap().1.is_none());
    }

    #[test]
    fn hunt_reference_point() {
        let cfg = QuadCfg::default();
        let v = killed_kernel(1.0, 3.0, 3.0, &cfg).unwrap();
        let p = free_kernel(0.0, 1.0, 3.0, 3.0).unwrap();
        let (lo, up) = sandwich_bounds(1.0, 3.0, 3.0).unwrap();
        assert!(v.value <= p);
        assert!(v.value >= lo && v.value <= up.unwrap());
        assert!(v.rel_error < 1e-6);
    }

    #[test]
    fn hunt_symmetric_within_error() {
        let cfg = QuadCfg::default();
        for &(t, x, y) in &[(1.0, 1.5, 4.0), (50.0, 1.01, 3.0), (0.1, 1.2, 1.3)] {
            let a = killed_kernel(t, x, y, &cfg).unwrap();
            let b = killed_kernel(t, y, x, &cfg).unwrap();
            let tol = 2.0 * (a.error_bound + b.error_bound);
            assert!((a.value - b.value).abs() <= tol, "({t},{x},{y}): {a:?} {b:?}");
        }
    }

    #[test]
    fn compensated_matches_direct_where_both_apply() {
        let cfg = QuadCfg::default();
        let ev = HuntEvaluator::new(&cfg).unwrap();
        for &(t, x, y) in &[(2.0, 1.3, 2.5), (100.0, 1.5, 1.8), (0.5, 1.05, 1.6)] {
            let ln_p = ln_p0(t, x, y);
            let (margin, err) = ev.direct(t, x, y, ln_p).unwrap();
            let c = ev.compensated(t, x, y).unwrap_or_else(|e| panic!("compensated ({t},{x},{y}): {e:?}"));
            let direct = ln_p.exp() * margin;
            let tol = c.error_bound + ln_p.exp() * err + 1e-9 * direct;
            assert!((c.value - direct).abs() <= tol, "({t},{x},{y}): {} vs {direct}", c.value);
        }
    }

    #[test]
    fn barrier_side_matches_compensated() {
        let cfg = QuadCfg::default();
        let ev = HuntEvaluator::new(&cfg).unwrap();
        for &(t, x, y) in &[(1.0, 2.0, 1.001), (0.1, 1.1, 1.0 + 1e-6), (10.0, 3.0, 1.2), (0.01, 1.01, 1.00002), (100.0, 1.5, 1.0 + 1e-8)] {
            let b = ev.barrier_side(t, x, y).unwrap_or_else(|e| panic!("({t},{x},{y}): {e:?}"));
            let c = ev.compensated(t, x, y).unwrap_or_else(|e| panic!("compensated ({t},{x},{y}): {e:?}"));
            let tol = b.error_bound + c.error_bound + 1e-9 * c.value;
            assert!((b.value - c.value).abs() <= tol, "({t},{x},{y}): {} vs {}", b.value, c.value);
            assert!(b.rel_error < 1e-6, "({t},{x},{y}): rel {}", b.rel_error);
        }
    }

    #[test]
    fn bessel_log_difference() {
        for &(z0, h) in &[(0.3, 1e-3), (5.0, 0.04), (200.0, 1.5), (1e-6, 1e-9)] {
            let direct = specfun::ln_i_nu_scaled_unchecked(0.0, z0 + h) - specfun::ln_i_nu_scaled_unchecked(0.0, z0);
            let v = ln_i0_scaled_diff(z0, z0 + h);
            assert!((v - direct).abs() <= 1e-12 * direct.abs() + 1e-15, "{z0} {h}: {v} vs {direct}");
        }
    }

    #[test]
    fn scaled_identity() {
        let cfg = QuadCfg::default();
        let one = killed_kernel(1.0, 2.0, 3.0, &cfg).unwrap();
        let s = killed_kernel_scaled(1.0, 1.0, 2.0, 3.0, &cfg).unwrap();
        assert_eq!(one.value, s.value);
        let s2 = killed_kernel_scaled(2.0, 4.0, 4.0, 6.0, &cfg).unwrap();
        assert!((s2.value / (0.25 * one.value) - 1.0).abs() < 1e-14);
        let direct = killed_kernel_scaled_direct(2.0, 4.0, 4.0, 6.0, &cfg).unwrap();
        assert!((direct.value / s2.value - 1.0).abs() < cfg.rel_tol);
        assert!(killed_kernel_scaled(2.0, 4.0, 1.5, 6.0, &cfg).is_err());
    }

    #[test]
    fn far_from_barrier_equals_free_kernel() {
        let cfg = QuadCfg::default();
        let v = killed_kernel(1e-3, 50.0, 50.1, &cfg).unwrap();
        assert_eq!(v.value, free_kernel(0.0, 1e-3, 50.0, 50.1).unwrap());
    }

    #[test]
    fn scan_window_brackets_gaussian() {
        let pts = scan_window(|v| -(v - 3.0) * (v - 3.0) / (2.0 * 0.01)).unwrap();
        assert!(pts[0] < 3.0 - 1.0 && *pts.last().unwrap() > 3.0 + 1.0);
        assert!(pts.iter().any(|&p| (p - 3.0).abs() < 1e-12));
        assert!(scan_window(|_| f64::NEG_INFINITY).is_none());
    }
}

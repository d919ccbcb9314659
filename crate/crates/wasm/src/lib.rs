//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array` in row-major order so the page
//! can plot it without any marshalling.

use hk_core::hitting::{self, ln_q_lower_bound, ln_q_oracle};
use hk_core::verify::envelopes::ln_estimate_unified;
use hk_core::{free_kernel, killed_kernel_mu_half, HkError, HuntEvaluator, QuadCfg};
use wasm_bindgen::prelude::*;

fn js(e: HkError) -> JsError {
    JsError::new(&e.to_string())
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| lo + (hi - lo) * (k as f64 + 0.5) / n as f64)
}

fn logspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |k| (a + (b - a) * k as f64 / (n - 1).max(1) as f64).exp())
}

/// Rows `[y, free p(t,x,y), killed p_1(t,x,y), 3-d image kernel]` for
/// `n` points of `y` in `(1, y_max)`.
#[wasm_bindgen]
pub fn kernel_profile(t: f64, x: f64, y_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    if !(y_max > 1.0 && n > 0) {
        return Err(JsError::new("need y_max > 1 and n > 0"));
    }
    let ev = HuntEvaluator::with_tables(&QuadCfg::default(), &[x], t).map_err(js)?;
    let mut out = Vec::with_capacity(4 * n);
    for y in linspace(1.0, y_max, n) {
        out.push(y);
        out.push(free_kernel(0.0, t, x, y).map_err(js)?);
        out.push(ev.eval(t, x, y).map_err(js)?.value);
        out.push(killed_kernel_mu_half(t, x, y).map_err(js)?);
    }
    Ok(out)
}

/// Rows `[s, ln q_x(s), ln lower bound, survival P_x(T_1 > s)]` for `n`
/// log-spaced times in `[s_lo, s_hi]`.
#[wasm_bindgen]
pub fn hitting_profile(x: f64, s_lo: f64, s_hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    if !(s_lo > 0.0 && s_hi > s_lo && n > 1) {
        return Err(JsError::new("need 0 < s_lo < s_hi and n > 1"));
    }
    let cfg = QuadCfg::default();
    let mut out = Vec::with_capacity(4 * n);
    for s in logspace(s_lo, s_hi, n) {
        out.push(s);
        out.push(ln_q_oracle(x, s, &cfg).map_err(js)?.ln_value);
        out.push(ln_q_lower_bound(x, s).map_err(js)?);
        out.push(hitting::survival_oracle(x, s, &cfg).map_err(js)?);
    }
    Ok(out)
}

/// `log10(p_1 / estimate_unified)` at fixed `y` on an `n x n` log grid,
/// `t` varying fastest. Points the oracle cannot resolve are NaN.
#[wasm_bindgen]
pub fn ratio_map(y: f64, t_lo: f64, t_hi: f64, x_lo: f64, x_hi: f64, n: usize) -> Result<Vec<f64>, JsError> {
    if !(n > 1 && t_lo > 0.0 && t_hi > t_lo && x_lo > 1.0 && x_hi > x_lo && y > 1.0) {
        return Err(JsError::new("need n > 1, 0 < t_lo < t_hi, 1 < x_lo < x_hi and y > 1"));
    }
    // p_1 is symmetric, so one table for y serves the whole map
    let ev = HuntEvaluator::with_tables(&QuadCfg::default(), &[y], t_hi).map_err(js)?;
    let mut out = Vec::with_capacity(n * n);
    for x in logspace(x_lo, x_hi, n) {
        for t in logspace(t_lo, t_hi, n) {
            let r = match ev.eval(t, y, x) {
                Ok(v) if v.rel_error <= 0.1 => (v.ln_value - ln_estimate_unified(1.0, t, x, y).map_err(js)?) / std::f64::consts::LN_10,
                _ => f64::NAN,
            };
            out.push(r);
        }
    }
    Ok(out)
}

//! Closed-form comparison functions for the killed kernel.
//!
//! Each envelope is assembled as a logarithm; the value functions simply
//! exponentiate. The comparability constants are not part of the formulas.

use crate::error::{require, HkError, Result};
use crate::kernels::ln_p0;

fn check(t: f64, x: f64, y: f64) -> Result<()> {
    require(t > 0.0, "t must be > 0", t)?;
    require(x > 1.0, "x must exceed the barrier 1", x)?;
    require(y > 1.0, "y must exceed the barrier 1", y)
}

/// `ln(1 ∧ u)` for `u > 0` given as `ln u`.
fn ln_min1(ln_u: f64) -> f64 {
    ln_u.min(0.0)
}

pub(crate) fn ln_small_unchecked(t: f64, x: f64, y: f64) -> f64 {
    let st = t.sqrt();
    let inner_x = (3.0 * t / (x + st)).ln();
    let inner_y = (3.0 * t / (y + st)).ln();
    x.ln().ln() + y.ln().ln() - inner_x.ln() - inner_y.ln() - t.ln() - (x * x + y * y) / (2.0 * t)
}

pub(crate) fn ln_large_unchecked(t: f64, x: f64, y: f64) -> f64 {
    let d = x - y;
    ln_min1(((x - 1.0) * (y - 1.0) / t).ln()) - 0.5 * (x * y * t).ln() - d * d / (2.0 * t)
}

/// `ln` of [`estimate_small`].
pub fn ln_estimate_small(t: f64, x: f64, y: f64) -> Result<f64> {
    check(t, x, y)?;
    if x * y > t {
        return Err(HkError::Regime(format!("small-time envelope needs xy <= t (t = {t}, x = {x}, y = {y})")));
    }
    Ok(ln_small_unchecked(t, x, y))
}

/// Envelope for `xy <= t`:
/// `ln x ln y / (ln(3t/(x+√t)) ln(3t/(y+√t))) · t^{-1} exp(-(x²+y²)/2t)`.
pub fn estimate_small(t: f64, x: f64, y: f64) -> Result<f64> {
    ln_estimate_small(t, x, y).map(f64::exp)
}

/// `ln` of [`estimate_large`].
pub fn ln_estimate_large(t: f64, x: f64, y: f64) -> Result<f64> {
    check(t, x, y)?;
    if x * y <= t {
        return Err(HkError::Regime(format!("large-time envelope needs xy > t (t = {t}, x = {x}, y = {y})")));
    }
    Ok(ln_large_unchecked(t, x, y))
}

/// Envelope for `xy > t`:
/// `(1 ∧ (x-1)(y-1)/t) (xyt)^{-1/2} exp(-(x-y)²/2t)`.
pub fn estimate_large(t: f64, x: f64, y: f64) -> Result<f64> {
    ln_estimate_large(t, x, y).map(f64::exp)
}

/// `ln` of [`estimate_unified`].
pub fn ln_estimate_unified(a: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    require(a > 0.0, "barrier must be > 0", a)?;
    require(t > 0.0, "t must be > 0", t)?;
    if !(x.is_finite() && x > a && y.is_finite() && y > a) {
        return Err(HkError::Domain(format!("x = {x}, y = {y} must exceed the barrier {a}")));
    }
    let top = 3.0 * (x * y + t);
    let st = t.sqrt();
    let ln_bracket = (x / a).ln().ln() + (y / a).ln().ln()
        - (top / (a * (x + st))).ln().ln()
        - (top / (a * (y + st))).ln().ln()
        + (x * y / t).ln_1p();
    Ok(ln_p0(t, x, y) + ln_min1(ln_bracket))
}

/// Single envelope valid for all `t > 0`, `x, y > a`:
/// `p(t,x,y) · (1 ∧ [ln(x/a) ln(y/a) (ln((3xy+3t)/(ax+a√t)) ln((3xy+3t)/(ay+a√t)))^{-1} (1 + xy/t)])`
/// with `p` the free kernel.
pub fn estimate_unified(a: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    ln_estimate_unified(a, t, x, y).map(f64::exp)
}

/// `ln` of [`estimate_mu`].
pub fn ln_estimate_mu(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check(t, x, y)?;
    require(mu != 0.0, "index must be nonzero", mu)?;
    let d = x - y;
    Ok(ln_min1(((x - 1.0) * (y - 1.0) / t).ln()) + (mu.abs() - 0.5) * ln_min1((x * y / t).ln())
        - (mu + 0.5) * (x * y).ln()
        - 0.5 * t.ln()
        - d * d / (2.0 * t))
}

/// Envelope for index `mu != 0` and barrier 1, with respect to
/// `y^{2mu+1} dy`:
/// `(1 ∧ (x-1)(y-1)/t) (1 ∧ xy/t)^{|mu|-1/2} (xy)^{-mu-1/2} t^{-1/2} exp(-(x-y)²/2t)`.
pub fn estimate_mu(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    ln_estimate_mu(mu, t, x, y).map(f64::exp)
}

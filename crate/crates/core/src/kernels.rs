//! Closed-form free Bessel heat kernels.
//!
//! All densities are taken with respect to the speed measure
//! `m^{(mu)}(dy) = y^{2mu+1} dy`. For index `mu`
//!
//! ```text
//! p^{(mu)}(t, x, y) = (1/t) (xy)^{-mu} exp(-(x^2 + y^2) / 2t) I_|mu|(xy / t)
//! ```
//!
//! which is evaluated as
//! `ln p = -ln t - mu ln(xy) - (x - y)^2 / 2t + ln(e^{-z} I_|mu|(z))`, `z = xy/t`,
//! so nothing overflows when `x, y >> sqrt(t)`.

use crate::error::{require, HkError, Result};
use crate::specfun;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Largest `|mu|` accepted by the free kernel.
pub const MAX_INDEX: f64 = 50.0;

/// A single kernel evaluation request: time `t`, points `x`, `y`, Bessel index
/// `mu` and barrier `a` (`a = 0` means no barrier).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointQuery {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub mu: f64,
    pub a: f64,
}

impl PointQuery {
    pub fn new(t: f64, x: f64, y: f64, mu: f64, a: f64) -> Result<Self> {
        let q = PointQuery { t, x, y, mu, a };
        q.validate()?;
        Ok(q)
    }

    /// A `mu = 0` query against the unit barrier.
    pub fn unit(t: f64, x: f64, y: f64) -> Self {
        PointQuery { t, x, y, mu: 0.0, a: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        require(self.t > 0.0, "t must be > 0", self.t)?;
        require(self.a >= 0.0, "barrier must be >= 0", self.a)?;
        require(self.mu.is_finite(), "index must be finite", self.mu)?;
        if !(self.x.is_finite() && self.x > self.a) {
            return Err(HkError::Domain(format!("x = {} must exceed the barrier {}", self.x, self.a)));
        }
        if !(self.y.is_finite() && self.y > self.a) {
            return Err(HkError::Domain(format!("y = {} must exceed the barrier {}", self.y, self.a)));
        }
        Ok(())
    }
}

pub(crate) fn check_txy(t: f64, x: f64, y: f64) -> Result<()> {
    require(t > 0.0, "t must be > 0", t)?;
    require(x > 0.0, "x must be > 0", x)?;
    require(y > 0.0, "y must be > 0", y)
}

/// `ln p^{(0)}(t, x, y)` without argument checks; symmetric bit for bit.
#[inline]
pub(crate) fn ln_p0(t: f64, x: f64, y: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let d = hi - lo;
    -t.ln() - d * d / (2.0 * t) + specfun::ln_i_nu_scaled_unchecked(0.0, lo * hi / t)
}

/// `ln p^{(mu)}(t, x, y)`.
pub fn ln_free_kernel(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    check_txy(t, x, y)?;
    require(mu.abs() <= MAX_INDEX, "|mu| must be <= 50", mu)?;
    if mu == 0.0 {
        return Ok(ln_p0(t, x, y));
    }
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let d = hi - lo;
    let ln_bessel = specfun::ln_i_nu_scaled_unchecked(mu.abs(), lo * hi / t);
    Ok(-t.ln() - mu * (lo.ln() + hi.ln()) - d * d / (2.0 * t) + ln_bessel)
}

/// Free Bessel heat kernel `p^{(mu)}(t, x, y)` for `|mu| <= 50`.
pub fn free_kernel(mu: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    ln_free_kernel(mu, t, x, y).map(f64::exp)
}

/// `∂p^{(0)}/∂x (t, x, y) = p (y I_1(xy/t)/I_0(xy/t) - x) / t`.
pub fn free_kernel_dx(t: f64, x: f64, y: f64) -> Result<f64> {
    check_txy(t, x, y)?;
    let z = x * y / t;
    let ratio = specfun::i1_scaled(z) / specfun::i0_scaled(z);
    Ok(ln_p0(t, x, y).exp() * (y * ratio - x) / t)
}

/// `p^{(1/2)}(t, x, y)` in elementary form:
/// `(2 pi t)^{-1/2} (xy)^{-1} (e^{-(x-y)^2/2t} - e^{-(x+y)^2/2t})`.
pub fn mu_half_free_kernel(t: f64, x: f64, y: f64) -> Result<f64> {
    check_txy(t, x, y)?;
    let d = x - y;
    let gauss = (-d * d / (2.0 * t)).exp();
    Ok(gauss * -(-2.0 * x * y / t).exp_m1() / ((2.0 * PI * t).sqrt() * x * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_bitwise() {
        for &(t, x, y) in &[(1.0, 2.0, 3.0), (1e-3, 5.0, 5.001), (1e6, 1.001, 900.0)] {
            for mu in [0.0, 0.5, 3.0] {
                assert_eq!(
                    free_kernel(mu, t, x, y).unwrap().to_bits(),
                    free_kernel(mu, t, y, x).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn origin_limit() {
        let v = free_kernel(0.0, 1.0, 1e-9, 2.0).unwrap();
        assert!((v / (-2.0f64).exp() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mu_half_closed_form() {
        let v = mu_half_free_kernel(1.0, 1.0, 1.0).unwrap();
        let expected = (1.0 - (-2.0f64).exp()) / (2.0 * PI).sqrt();
        assert!((v / expected - 1.0).abs() < 1e-14);
        let g = free_kernel(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!((g / expected - 1.0).abs() < 1e-10);
        // finite limit at the origin: (2/(pi t))^{1/2} t^{-1} e^{-x^2/2t}
        let v = mu_half_free_kernel(1.0, 2.0, 1e-12).unwrap();
        let lim = (2.0 / PI).sqrt() * (-2.0f64).exp();
        assert!((v / lim - 1.0).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(free_kernel(0.0, 0.0, 1.0, 1.0), Err(HkError::Domain(_))));
        assert!(matches!(free_kernel(0.0, 1.0, -1.0, 1.0), Err(HkError::Domain(_))));
        assert!(matches!(free_kernel(51.0, 1.0, 1.0, 1.0), Err(HkError::Domain(_))));
        assert!(free_kernel_dx(1.0, 0.0, 1.0).is_err());
        assert!(PointQuery::new(1.0, 0.5, 3.0, 0.0, 1.0).is_err());
        assert!(PointQuery::new(1.0, 1.5, 3.0, 0.0, 1.0).is_ok());
    }

    #[test]
    fn dx_sign_matches_direct_formula() {
        for &(t, x) in &[(1.0, 3.0), (4.0, 2.5), (0.1, 1.0)] {
            let z = x * x / t;
            let direct = x * specfun::bessel_i1(z).unwrap() / specfun::bessel_i0(z).unwrap() - x;
            let d = free_kernel_dx(t, x, x).unwrap();
            assert_eq!(d.signum(), direct.signum());
        }
        assert!(free_kernel_dx(1.0, 0.5, 3.0).unwrap() > 0.0);
    }

    #[test]
    fn extreme_regime_does_not_overflow() {
        let ln = ln_free_kernel(0.0, 1e-3, 1000.0, 999.0).unwrap();
        assert!(ln.is_finite());
        let v = free_kernel(0.0, 1e-3, 1000.0, 1000.0).unwrap();
        let approx = 1.0 / (1e-3 * (2.0 * PI * 1e9).sqrt());
        assert!((v / approx - 1.0).abs() < 1e-6);
    }
}

//! Scalar special functions: modified Bessel functions `I_nu`, `K_0`, `K_1`
//! and the upper incomplete gamma function.
//!
//! Every Bessel function comes with an exponentially scaled variant
//! (`e^{-z} I_nu(z)`, `e^{z} K_0(z)`). Kernel code only ever calls the scaled
//! forms and assembles exponents in log space; the unscaled forms overflow
//! long before the arguments reached by the kernels (`xy/t` up to ~1e9).
//!
//! `I_nu` uses the ascending power series for `z <= 30` and the large-argument
//! (Hankel) expansion above. `K_0`/`K_1` use the ascending series for `|z| <= 2`
//! and Steed's continued fraction (CF2) elsewhere; both branches accept complex
//! arguments in the open right half-plane, which is what the first-passage
//! inversion needs.

use crate::error::{require, HkError, Result};
use crate::quad;
use num_complex::Complex64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_EPS: f64 = 1e-18;
const ASYMPTOTIC_SWITCH: f64 = 30.0;
/// Unscaled `I_0`/`I_1`/`I_nu` refuse arguments at or above this point.
pub const UNSCALED_LIMIT: f64 = 700.0;
const K_SERIES_RADIUS: f64 = 2.0;
const CF2_MAX_ITER: usize = 20_000;

// ---------------------------------------------------------------------------
// Gamma function (Lanczos, g = 7, n = 9)
// ---------------------------------------------------------------------------

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// `Γ(x)` for real `x` away from the poles.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

// ---------------------------------------------------------------------------
// Modified Bessel functions of the first kind
// ---------------------------------------------------------------------------

fn check_order_arg(nu: f64, z: f64) -> Result<()> {
    require(nu >= 0.0, "Bessel order must be >= 0", nu)?;
    require(z >= 0.0, "Bessel argument must be >= 0", z)
}

/// Large-argument expansion of `e^{-z} I_nu(z)`; `None` when the terms stop
/// shrinking before reaching double precision.
fn i_nu_scaled_asymptotic(nu: f64, z: f64) -> Option<f64> {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..500 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (8.0 * kf * z);
        if term == 0.0 {
            break;
        }
        let mag = term.abs();
        if mag > prev && kf > nu {
            return None;
        }
        sum += term;
        if mag < SERIES_EPS * sum.abs() {
            return Some(sum / (2.0 * PI * z).sqrt());
        }
        prev = mag;
    }
    if term == 0.0 {
        Some(sum / (2.0 * PI * z).sqrt())
    } else {
        None
    }
}

/// Ascending series, returned as `(ln_prefactor, sum)` with
/// `e^{-z} I_nu(z) = exp(ln_prefactor) * sum`.
fn i_nu_scaled_series(nu: f64, z: f64) -> (f64, f64) {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut offset = 0.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < SERIES_EPS * sum {
            break;
        }
        if sum > 1e280 {
            offset += sum.ln();
            term /= sum;
            sum = 1.0;
        }
    }
    let ln_pref = if nu == 0.0 {
        -z
    } else if nu == 1.0 {
        (0.5 * z).ln() - z
    } else {
        nu * (0.5 * z).ln() - ln_gamma(nu + 1.0) - z
    };
    (ln_pref + offset, sum)
}

/// The expansion in `1/z` is only useful once `z` dominates `nu^2`.
#[inline]
fn use_asymptotic(nu: f64, z: f64) -> bool {
    z > ASYMPTOTIC_SWITCH && z > nu * nu
}

fn i_nu_scaled_unchecked(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if use_asymptotic(nu, z) {
        if let Some(v) = i_nu_scaled_asymptotic(nu, z) {
            return v;
        }
    }
    let (ln_pref, sum) = i_nu_scaled_series(nu, z);
    if nu == 0.0 {
        (-z).exp() * sum
    } else {
        ln_pref.exp() * sum
    }
}

pub(crate) fn ln_i_nu_scaled_unchecked(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if use_asymptotic(nu, z) {
        if let Some(v) = i_nu_scaled_asymptotic(nu, z) {
            return v.ln();
        }
    }
    let (ln_pref, sum) = i_nu_scaled_series(nu, z);
    ln_pref + sum.ln()
}

/// `e^{-z} I_0(z)`.
pub(crate) fn i0_scaled(z: f64) -> f64 {
    i_nu_scaled_unchecked(0.0, z)
}

/// `e^{-z} I_1(z)`.
pub(crate) fn i1_scaled(z: f64) -> f64 {
    i_nu_scaled_unchecked(1.0, z)
}

/// `I_0(z)` for `0 <= z < 700`.
pub fn bessel_i0(z: f64) -> Result<f64> {
    bessel_i_nu(0.0, z)
}

/// `e^{-z} I_0(z)`, valid for every finite `z >= 0`.
pub fn bessel_i0_scaled(z: f64) -> Result<f64> {
    bessel_i_nu_scaled(0.0, z)
}

/// `I_1(z)` for `0 <= z < 700`.
pub fn bessel_i1(z: f64) -> Result<f64> {
    bessel_i_nu(1.0, z)
}

/// `e^{-z} I_1(z)`.
pub fn bessel_i1_scaled(z: f64) -> Result<f64> {
    bessel_i_nu_scaled(1.0, z)
}

/// `I_nu(z)` for real order `nu >= 0` and `0 <= z < 700`.
pub fn bessel_i_nu(nu: f64, z: f64) -> Result<f64> {
    check_order_arg(nu, z)?;
    if z >= UNSCALED_LIMIT {
        return Err(HkError::Overflow(format!(
            "I_{nu}({z}) exceeds the unscaled range; use the scaled variant"
        )));
    }
    Ok(i_nu_scaled_unchecked(nu, z) * z.exp())
}

/// `e^{-z} I_nu(z)`.
pub fn bessel_i_nu_scaled(nu: f64, z: f64) -> Result<f64> {
    check_order_arg(nu, z)?;
    Ok(i_nu_scaled_unchecked(nu, z))
}

/// `ln(e^{-z} I_nu(z))`; finite even where the scaled value underflows
/// (large order, tiny argument).
pub fn ln_bessel_i_nu_scaled(nu: f64, z: f64) -> Result<f64> {
    check_order_arg(nu, z)?;
    Ok(ln_i_nu_scaled_unchecked(nu, z))
}

// ---------------------------------------------------------------------------
// Modified Bessel functions of the second kind, K_0 and K_1
// ---------------------------------------------------------------------------

/// `(e^z K_0(z), e^z K_1(z))` by the ascending series, `|z| <= 2`.
fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let q = 0.25 * z * z;
    let half_z = 0.5 * z;
    let ln_half = half_z.ln();

    let mut i0 = Complex64::new(1.0, 0.0);
    let mut k0_tail = Complex64::new(0.0, 0.0);
    // I_1 / (z/2) and the K_1 digamma series
    let mut i1_red = Complex64::new(1.0, 0.0);
    let mut k1_tail = Complex64::new(2.0 * (1.0 - EULER_GAMMA) - 1.0, 0.0);

    let mut qk = Complex64::new(1.0, 0.0);
    let mut inv_fact2 = 1.0; // 1/(k!)^2
    let mut inv_fact_pair = 1.0; // 1/(k!(k+1)!)
    let mut harmonic = 0.0; // H_k
    for k in 1..60 {
        let kf = k as f64;
        qk *= q;
        inv_fact2 /= kf * kf;
        inv_fact_pair /= kf * (kf + 1.0);
        harmonic += 1.0 / kf;
        let t0 = qk * inv_fact2;
        let t1 = qk * inv_fact_pair;
        i0 += t0;
        k0_tail += t0 * harmonic;
        i1_red += t1;
        // psi(k+1) + psi(k+2) = -2γ + 2H_k + 1/(k+1)
        k1_tail += t1 * (-2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (kf + 1.0));
        if t0.norm() < SERIES_EPS * i0.norm() && t1.norm() < SERIES_EPS * i1_red.norm() {
            break;
        }
    }
    let k0 = -(ln_half + EULER_GAMMA) * i0 + k0_tail;
    let i1 = half_z * i1_red;
    let k1 = z.inv() + ln_half * i1 - 0.25 * z * k1_tail;
    let scale = z.exp();
    (k0 * scale, k1 * scale)
}

/// `(e^z K_0(z), e^z K_1(z))` by Steed's continued fraction, `|z| > 2`,
/// `Re z > 0`.
fn k01_cf2(z: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let a1 = 0.25;
    let mut b = 2.0 * (one + z);
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 1..CF2_MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = (b + a * d).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm() < 1e-17 * s.norm() {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * z)).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

fn k01_scaled(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() <= K_SERIES_RADIUS {
        k01_series(z)
    } else {
        k01_cf2(z)
    }
}

fn check_right_half_plane(z: Complex64) -> Result<()> {
    if z.re > 0.0 && z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(HkError::Domain(format!(
            "K_0 requires Re z > 0 (got {z})"
        )))
    }
}

/// `e^z K_0(z)` for complex `z` with `Re z > 0`.
pub fn bessel_k0_scaled_complex(z: Complex64) -> Result<Complex64> {
    check_right_half_plane(z)?;
    Ok(k01_scaled(z).0)
}

/// `K_0(z)` for complex `z` with `Re z > 0`.
pub fn bessel_k0_complex(z: Complex64) -> Result<Complex64> {
    check_right_half_plane(z)?;
    Ok(k01_scaled(z).0 * (-z).exp())
}

/// `e^z K_0(z)` without argument checks; the caller guarantees `Re z > 0`.
#[inline]
pub(crate) fn k0_scaled_c(z: Complex64) -> Complex64 {
    k01_scaled(z).0
}

/// `(e^z K_0(z), e^z K_1(z))` without argument checks (`Re z > 0`).
#[inline]
pub(crate) fn k01_scaled_c(z: Complex64) -> (Complex64, Complex64) {
    k01_scaled(z)
}

/// `K_0(z)` for real `z > 0`.
pub fn bessel_k0(z: f64) -> Result<f64> {
    require(z > 0.0, "K_0 requires z > 0", z)?;
    Ok(k01_scaled(Complex64::new(z, 0.0)).0.re * (-z).exp())
}

/// `e^z K_0(z)` for real `z > 0`.
pub fn bessel_k0_scaled(z: f64) -> Result<f64> {
    require(z > 0.0, "K_0 requires z > 0", z)?;
    Ok(k01_scaled(Complex64::new(z, 0.0)).0.re)
}

/// `K_1(z)` for real `z > 0`.
pub fn bessel_k1(z: f64) -> Result<f64> {
    require(z > 0.0, "K_1 requires z > 0", z)?;
    Ok(k01_scaled(Complex64::new(z, 0.0)).1.re * (-z).exp())
}

/// Reference evaluation of `K_0(z) = ∫_0^∞ exp(-z cosh u) du` by tanh-sinh
/// quadrature. Slow; intended for cross-checking the series/CF2 branches.
pub fn bessel_k0_integral(z: Complex64) -> Result<Complex64> {
    check_right_half_plane(z)?;
    // beyond `upper` the integrand is below e^{-740} in modulus
    let upper = (740.0 / z.re).max(1.0).acosh() + 1.0;
    quad::tanh_sinh_complex(|u| (-z * u.cosh()).exp(), 0.0, upper, 1e-14)
}

// ---------------------------------------------------------------------------
// Upper incomplete gamma
// ---------------------------------------------------------------------------

/// Lentz continued fraction for `Γ(a, z)`, good for `z >~ 1`.
fn upper_gamma_cf(a: f64, z: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let fi = i as f64;
        let an = -fi * (fi - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * z.ln() - z).exp() * h
}

/// Lower incomplete gamma `γ(a, z)` by its power series, `a > 0`.
fn lower_gamma_series(a: f64, z: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..10_000 {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum * (a * z.ln() - z).exp()
}

/// Exponential integral `E_1(z) = Γ(0, z)` for small `z`.
fn e1_series(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= -z / kf;
        let add = term / kf;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

/// Upper incomplete gamma `Γ(a, z) = ∫_z^∞ u^{a-1} e^{-u} du` for
/// `a ∈ [-2, 2]` and `z > 0`.
pub fn upper_incomplete_gamma(a: f64, z: f64) -> Result<f64> {
    require((-2.0..=2.0).contains(&a), "incomplete gamma order must lie in [-2, 2]", a)?;
    require(z > 0.0, "incomplete gamma argument must be > 0", z)?;
    Ok(upper_gamma_unchecked(a, z))
}

fn upper_gamma_unchecked(a: f64, z: f64) -> f64 {
    if z >= 1.5 {
        return upper_gamma_cf(a, z);
    }
    if a > 0.0 {
        gamma(a) - lower_gamma_series(a, z)
    } else if a == 0.0 {
        e1_series(z)
    } else {
        // Γ(a, z) = (Γ(a+1, z) - z^a e^{-z}) / a
        (upper_gamma_unchecked(a + 1.0, z) - (a * z.ln() - z).exp()) / a
    }
}

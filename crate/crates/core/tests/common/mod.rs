//! Measurements shared by the integration tests and the acceptance run. Each
//! returns the worst discrepancy found, so callers pick their own tolerance.

#![allow(dead_code)]

use hk_core::hitting::{self, ln_q_oracle};
use hk_core::quad::{integrate, GkOptions};
use hk_core::specfun::bessel_k0;
use hk_core::{free_kernel, HuntEvaluator, QuadCfg};

pub fn opts(rel_tol: f64) -> GkOptions {
    GkOptions { rel_tol, abs_tol: 0.0, max_subdivisions: 5000, noise: 0.0 }
}

pub fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Sorted breakpoints in `(lo, hi)`: `c + k w` for every `(c, w)` in
/// `centres`, `k = -12..=12`, plus the endpoints.
pub fn breakpoints(lo: f64, hi: f64, centres: &[(f64, f64)]) -> Vec<f64> {
    let mut pts = vec![lo, hi];
    for &(c, w) in centres {
        for k in -12..=12 {
            let p = c + k as f64 * w;
            if p > lo && p < hi {
                pts.push(p);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Worst `|∫ p(t, x, y) y dy - 1|` over a 5 x 5 log grid.
pub fn free_normalization() -> f64 {
    let mut worst = 0.0f64;
    for t in log_axis(1e-3, 1e3, 5) {
        for x in log_axis(1e-2, 1e2, 5) {
            let hi = x + 12.0 * t.sqrt();
            let pts = breakpoints(0.0, hi, &[(x, t.sqrt())]);
            let mass = integrate(|y| free_kernel(0.0, t, x, y).unwrap() * y, &pts, &opts(1e-12)).unwrap().value;
            worst = worst.max((mass - 1.0).abs());
        }
    }
    worst
}

/// Worst relative Chapman-Kolmogorov defect of the free kernel at five
/// `(s, t, x)` tuples with `y = 1.5`.
pub fn free_chapman_kolmogorov() -> f64 {
    let y = 1.5;
    let tuples = [(0.1f64, 0.1f64, 0.5f64), (1.0, 1.0, 2.0), (10.0, 0.1, 8.0), (0.1, 10.0, 2.0), (10.0, 10.0, 0.5)];
    let mut worst = 0.0f64;
    for (s, t, x) in tuples {
        let hi = (x + 12.0 * s.sqrt()).max(y + 12.0 * t.sqrt());
        let pts = breakpoints(0.0, hi, &[(x, s.sqrt()), (y, t.sqrt())]);
        let lhs = integrate(
            |w| free_kernel(0.0, s, x, w).unwrap() * free_kernel(0.0, t, w, y).unwrap() * w,
            &pts,
            &opts(1e-11),
        )
        .unwrap()
        .value;
        let rhs = free_kernel(0.0, s + t, x, y).unwrap();
        worst = worst.max((lhs / rhs - 1.0).abs());
    }
    worst
}

/// Worst `|∫ p_1(t, x, y) y dy - P_x(T_1 > t)|` over a 5 x 5 grid.
pub fn killed_integral_vs_survival() -> f64 {
    let cfg = QuadCfg::default();
    let mut worst = 0.0f64;
    for t in log_axis(1e-2, 1e2, 5) {
        for x in [1.01f64, 1.1, 2.0, 10.0, 100.0] {
            let ev = HuntEvaluator::with_tables(&cfg, &[x], t).unwrap();
            let hi = x + 12.0 * t.sqrt();
            // y geometric towards the barrier, where p_1 vanishes linearly
            let mut pts = breakpoints(1.0, hi, &[(x, t.sqrt())]);
            pts.extend((1..12).map(|k| 1.0 + (x - 1.0).min(t.sqrt()) * 0.5f64.powi(k)));
            pts.sort_by(f64::total_cmp);
            let mass = integrate(
                |y| if y <= 1.0 { 0.0 } else { ev.eval(t, x, y).unwrap_or_else(|e| panic!("p_1({t}, {x}, {y}): {e:?}")).value * y },
                &pts,
                &opts(1e-8),
            )
            .unwrap()
            .value;
            let surv = hitting::survival_oracle(x, t, &cfg).unwrap();
            worst = worst.max((mass - surv).abs());
        }
    }
    worst
}

/// Worst relative Chapman-Kolmogorov defect of the killed kernel at five
/// `(t, x, y)` tuples, split at `t/2`.
pub fn killed_chapman_kolmogorov() -> f64 {
    let cfg = QuadCfg::default();
    let mut worst = 0.0f64;
    for (t, x, y) in [(1.0f64, 2.0f64, 2.0f64), (0.2, 1.1, 1.4), (4.0, 3.0, 1.5), (10.0, 1.5, 6.0), (100.0, 20.0, 2.0)] {
        let h = 0.5 * t;
        // p_1(h, w, y) = p_1(h, y, w), so tables for x and y cover both factors
        let ev = HuntEvaluator::with_tables(&cfg, &[x, y], t).unwrap();
        let p1 = |s: f64, a: f64, b: f64| ev.eval(s, a, b).unwrap_or_else(|e| panic!("p_1({s}, {a}, {b}): {e:?}")).value;
        let hi = x.max(y) + 12.0 * h.sqrt();
        let mut pts = breakpoints(1.0, hi, &[(x, h.sqrt()), (y, h.sqrt())]);
        pts.extend((1..10).map(|k| 1.0 + h.sqrt().min(x.min(y) - 1.0) * 0.5f64.powi(k)));
        pts.sort_by(f64::total_cmp);
        let lhs = integrate(|w| if w <= 1.0 { 0.0 } else { p1(h, x, w) * p1(h, y, w) * w }, &pts, &opts(1e-7))
            .unwrap()
            .value;
        worst = worst.max((lhs / p1(t, x, y) - 1.0).abs());
    }
    worst
}

/// `∫_{s1}^{s2} e^{-lambda s} q_x(s) ds`, integrated in `ln s`.
pub fn q_integral(x: f64, s1: f64, s2: f64, lambda: f64) -> f64 {
    let cfg = QuadCfg::default();
    let (u1, u2) = (s1.ln(), s2.ln());
    let n = (u2 - u1).ceil() as usize;
    let pts: Vec<f64> = (0..=n).map(|k| u1 + (u2 - u1) * k as f64 / n as f64).collect();
    let opts = GkOptions { rel_tol: 1e-10, abs_tol: 0.0, max_subdivisions: 5000, noise: 1e-9 };
    integrate(
        |u| {
            let s = u.exp();
            (ln_q_oracle(x, s, &cfg).unwrap().ln_value + u - lambda * s).exp()
        },
        &pts,
        &opts,
    )
    .unwrap()
    .value
}

/// Worst `|∫_0^T q_x + P_x(T_1 > T) - 1|` at `x` in {1.1, 2, 10, 100}.
///
/// The tail of q decays like `1/(s ln^2 s)`, so the mass beyond `T` is
/// taken from the survival function.
pub fn hitting_mass() -> f64 {
    let cfg = QuadCfg::default();
    let mut worst = 0.0f64;
    for x in [1.1f64, 2.0, 10.0, 100.0] {
        let a = x - 1.0;
        let horizon = 100.0 * x * x;
        let mass = q_integral(x, a * a / 2000.0, horizon, 0.0) + hitting::survival_oracle(x, horizon, &cfg).unwrap();
        worst = worst.max((mass - 1.0).abs());
    }
    worst
}

/// Worst relative error of the Laplace transform of q against
/// `K_0(x r)/K_0(r)`, `r = sqrt(2 lambda)`, at 12 `(x, lambda)` pairs. The
/// real `K_0` goes through the series/asymptotic branches, not the complex
/// routine used by the inversion.
pub fn laplace_round_trip() -> f64 {
    let mut worst = 0.0f64;
    for x in [1.1f64, 2.0, 10.0, 100.0] {
        for lambda in [0.1f64, 1.0, 10.0] {
            let r = (2.0 * lambda).sqrt();
            let exact = bessel_k0(x * r).unwrap() / bessel_k0(r).unwrap();
            let a = x - 1.0;
            let hi = (a / r).max(1.0) * 1e3 / lambda.min(1.0);
            let v = q_integral(x, a * a / 2000.0, hi, lambda);
            worst = worst.max((v / exact - 1.0).abs());
        }
    }
    worst
}

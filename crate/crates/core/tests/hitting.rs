//! Cross-checks of the hitting-time oracle against independent routes.

mod common;

use common::{log_axis, q_integral};
use hk_core::hitting::{self, ln_q_oracle, q_lower_bound, survival_with_err};
use hk_core::talbot::q_talbot;
use hk_core::QuadCfg;

#[test]
fn density_and_survival_conserve_mass() {
    let worst = common::hitting_mass();
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn survival_is_tail_of_density_near_barrier() {
    let cfg = QuadCfg::default();
    for (x, t1, t2) in [(1.0 + 1e-8, 0.1, 10.0), (1.001, 1e-3, 1.0), (1.05, 1.0, 1e4)] {
        let between = q_integral(x, t1, t2, 0.0);
        let (s1, e1) = survival_with_err(x, t1, &cfg).unwrap();
        let (s2, e2) = survival_with_err(x, t2, &cfg).unwrap();
        let diff = s1 - s2;
        assert!((between / diff - 1.0).abs() < 1e-6, "x={x}: {between} vs {diff} (errors {e1:e}, {e2:e})");
    }
}

#[test]
fn laplace_round_trip() {
    let worst = common::laplace_round_trip();
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn talbot_agrees_where_it_is_trustworthy() {
    let cfg = QuadCfg::default();
    for (x, s) in [(2.0, 1.0), (1.5, 0.3), (3.0, 5.0), (1.2, 20.0)] {
        let q = hitting::q_oracle(x, s, &cfg).unwrap();
        let t = q_talbot(x, s, 32).unwrap();
        assert!((t / q - 1.0).abs() < 1e-6, "({x}, {s}): {t} vs {q}");
    }
}

#[test]
fn density_dominates_lower_bound() {
    let cfg = QuadCfg::default();
    for x in log_axis(1.001, 1e3, 20) {
        for s in log_axis(1e-3, 1e6, 20) {
            let v = ln_q_oracle(x, s, &cfg).unwrap();
            let lb = hitting::ln_q_lower_bound(x, s).unwrap();
            assert!(v.ln_value >= lb + (-1e-6f64).ln_1p(), "({x}, {s}): {} < {lb}", v.ln_value);
        }
    }
    assert!(q_lower_bound(2.0, 1.0).unwrap() <= hitting::q_oracle(2.0, 1.0, &cfg).unwrap());
}

#[test]
fn survival_monotone_with_unit_limit() {
    let cfg = QuadCfg::default();
    for x in [1.01f64, 2.0, 30.0] {
        let a = x - 1.0;
        assert!((hitting::survival_oracle(x, a * a / 100.0, &cfg).unwrap() - 1.0).abs() < 1e-15);
        let mut prev = 1.0;
        for t in log_axis(a * a / 10.0, 1e8, 30) {
            let s = hitting::survival_oracle(x, t, &cfg).unwrap();
            assert!(s <= prev + 1e-12 && s > 0.0, "x={x} t={t}: {s} after {prev}");
            prev = s;
        }
    }
}

//! Numerical integration: globally adaptive Gauss–Kronrod (7/15 points) and a
//! tanh-sinh rule for smooth integrands with fast-decaying tails.

use crate::error::{HkError, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

/// User-facing numerical settings shared by every oracle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadCfg {
    /// Relative tolerance requested from each adaptive integration.
    pub rel_tol: f64,
    /// Absolute floor below which integrals are treated as converged.
    pub abs_floor: f64,
    /// Maximum number of interval bisections per integral.
    pub max_subdivisions: usize,
    /// Initial node budget of the contour inversion (16 nodes per starting
    /// panel); the convergence check repeats the inversion with twice as many.
    #[serde(alias = "talbot_nodes")]
    pub contour_nodes: usize,
}

impl Default for QuadCfg {
    fn default() -> Self {
        QuadCfg {
            rel_tol: 1e-7,
            abs_floor: 1e-320,
            max_subdivisions: 2000,
            contour_nodes: 48,
        }
    }
}

impl QuadCfg {
    pub fn validate(&self) -> Result<()> {
        let ok = self.rel_tol.is_finite()
            && self.rel_tol > 0.0
            && self.rel_tol <= 1e-2
            && self.abs_floor.is_finite()
            && self.abs_floor >= 0.0
            && self.max_subdivisions >= 16
            && (16..=4096).contains(&self.contour_nodes);
        if ok {
            Ok(())
        } else {
            Err(HkError::Config(format!("invalid quadrature settings {self:?}")))
        }
    }

    /// Starting panel count for a contour inversion with `nodes` nodes.
    pub(crate) fn panels(nodes: usize) -> usize {
        nodes.div_ceil(16).max(1)
    }
}

/// Stopping rule for [`integrate`].
#[derive(Clone, Copy, Debug)]
pub struct GkOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Relative accuracy of the integrand values. An error estimate below
    /// `4 noise ∫|f|` is accepted since splitting cannot reduce it (the
    /// Kronrod estimate amplifies noise by a small factor).
    pub noise: f64,
}

impl GkOptions {
    pub fn tight() -> Self {
        GkOptions {
            rel_tol: 1e-13,
            abs_tol: 0.0,
            max_subdivisions: 5000,
            noise: 0.0,
        }
    }
}

/// Result of an integration: estimate, absolute error estimate and an
/// estimate of the integral of `|f|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_err: f64,
    pub abs_value: f64,
    pub evals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// One 15-point Kronrod panel with the QUADPACK error heuristic.
fn qk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    let mut resabs = resk.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
    }
    let reskh = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - reskh).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }
    let result = resk * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (result, err, resabs)
}

/// Adaptive integration over the polyline `points` (sorted, at least two
/// entries). Returns [`HkError::Quadrature`] when the tolerance is not met
/// within the subdivision budget or the integrand is not finite.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, points: &[f64], opts: &GkOptions) -> Result<Integral> {
    let (integral, converged) = integrate_best_effort(f, points, opts);
    if converged && integral.value.is_finite() {
        Ok(integral)
    } else {
        Err(HkError::Quadrature {
            value: integral.value,
            abs_err: integral.abs_err,
        })
    }
}

/// Like [`integrate`] but always returns the current estimate together with a
/// convergence flag.
pub fn integrate_best_effort<F: FnMut(f64) -> f64>(
    mut f: F,
    points: &[f64],
    opts: &GkOptions,
) -> (Integral, bool) {
    assert!(points.len() >= 2, "integration needs at least one interval");
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut total_abs = 0.0;
    let mut evals = 0;
    for w in points.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e, r) = qk15(&mut f, w[0], w[1]);
        evals += 15;
        total += v;
        total_err += e;
        total_abs += r;
        heap.push(Segment { a: w[0], b: w[1], value: v, err: e, abs: r });
    }
    let summary = |heap: &BinaryHeap<Segment>, evals| {
        let mut value = 0.0;
        let mut abs_err = 0.0;
        let mut abs_value = 0.0;
        for s in heap.iter() {
            value += s.value;
            abs_err += s.err;
            abs_value += s.abs;
        }
        Integral { value, abs_err, abs_value, evals }
    };
    let mut splits = 0;
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return (summary(&heap, evals), false);
        }
        // every panel reports at least 50 eps of its |f| mass, so an error
        // near that floor cannot be reduced by splitting either
        let floor = (4.0 * opts.noise).max(100.0 * f64::EPSILON) * total_abs;
        let target = opts.abs_tol.max(opts.rel_tol * total.abs()).max(floor);
        if total_err <= target {
            break;
        }
        if splits >= opts.max_subdivisions {
            return (summary(&heap, evals), false);
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine resolution
            heap.push(seg);
            return (summary(&heap, evals), false);
        }
        let (v1, e1, r1) = qk15(&mut f, seg.a, mid);
        let (v2, e2, r2) = qk15(&mut f, mid, seg.b);
        evals += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        total_abs += r1 + r2 - seg.abs;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1, abs: r1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2, abs: r2 });
        splits += 1;
        if splits % 64 == 0 {
            // refresh running sums to shed accumulated rounding
            let s = summary(&heap, evals);
            total = s.value;
            total_err = s.abs_err;
            total_abs = s.abs_value;
        }
    }
    (summary(&heap, evals), true)
}

/// Tanh-sinh quadrature of a complex-valued integrand on `[a, b]`, refining
/// the step until successive levels agree to `tol` relative.
pub fn tanh_sinh_complex<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, tol: f64) -> Result<Complex64> {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let t_max = 4.0;
    let node = |t: f64| -> (f64, f64) {
        let s = FRAC_PI_2 * t.sinh();
        let ch = s.cosh();
        let x = s.tanh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        (x, w)
    };
    let mut h = 0.5;
    let mut sum = f(c) * FRAC_PI_2;
    let mut k = 1;
    while (k as f64) * h <= t_max {
        let (x, w) = node(k as f64 * h);
        if x < 1.0 {
            sum += (f(c + half * x) + f(c - half * x)) * w;
        }
        k += 1;
    }
    let mut prev = sum * h * half;
    for _level in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let (x, w) = node(k as f64 * h);
            if x < 1.0 {
                sum += (f(c + half * x) + f(c - half * x)) * w;
            }
            k += 2;
        }
        let cur = sum * h * half;
        if (cur - prev).norm() <= tol * cur.norm() {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(HkError::Quadrature {
        value: prev.re,
        abs_err: f64::NAN,
    })
}

/// Real-valued convenience wrapper around [`tanh_sinh_complex`].
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    tanh_sinh_complex(|x| Complex64::new(f(x), 0.0), a, b, tol).map(|v| v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, &[0.0, 2.0], &GkOptions::tight()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn gk_peaked_and_breakpoints() {
        let eps: f64 = 1e-4;
        let f = |x: f64| eps / (x * x + eps * eps);
        let r = integrate(f, &[-1.0, 0.0, 1.0], &GkOptions::tight()).unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((r.value - exact).abs() < 1e-11 * exact);
        assert!(r.abs_err < 1e-11);
    }

    #[test]
    fn gk_reports_non_convergence() {
        let opts = GkOptions { rel_tol: 1e-15, abs_tol: 0.0, max_subdivisions: 3, noise: 0.0 };
        let r = integrate(|x: f64| (1.0 / x).sin(), &[1e-6, 1.0], &opts);
        assert!(matches!(r, Err(HkError::Quadrature { .. })));
    }

    #[test]
    fn tanh_sinh_gaussian() {
        let v = tanh_sinh(|x| (-x * x).exp(), 0.0, 30.0, 1e-14).unwrap();
        assert!((v - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn cfg_validation() {
        assert!(QuadCfg::default().validate().is_ok());
        let bad = QuadCfg { rel_tol: -1.0, ..QuadCfg::default() };
        assert!(matches!(bad.validate(), Err(HkError::Config(_))));
        let json = r#"{"rel_tol":1e-8,"talbot_nodes":96}"#;
        let cfg: QuadCfg = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.contour_nodes, 96);
        assert_eq!(cfg.max_subdivisions, 2000);
    }
}

//! Verification of the two-sided estimates against the numerical oracles.
//!
//! The comparability constants of the estimates are not explicit, so the
//! harness measures them: a sweep reports the extreme values of
//! `oracle / envelope` over a grid, exact inequalities are checked pointwise,
//! and the resulting brackets are frozen in a baseline file. The brackets
//! only describe the swept grid; nothing here certifies them beyond it.

pub mod baseline;
pub mod checks;
pub mod envelopes;
pub mod grid;
pub mod sweep;

pub use baseline::{Bracket, BaselineEntry};
pub use checks::{check_inequalities, check_table};
pub use envelopes::{estimate_large, estimate_mu, estimate_small, estimate_unified};
pub use grid::{Axis, GridSpec, RegimeFilter};
pub use sweep::{ratio_sweep, sweep_table, Envelope, Oracle, OracleTable, RatioReport, SweepOutput, SweepRow, Violation};

use crate::error::Result;
use crate::hitting;
use crate::kernels::PointQuery;
use crate::mc::McConfig;
use crate::quad::QuadCfg;
use serde::{Deserialize, Serialize};

/// Settings shared by sweeps and checks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyCfg {
    pub quad: QuadCfg,
    pub mc: McConfig,
    /// Multiply every last-exit value by this factor; used to show that the
    /// checks catch a faulty oracle.
    pub inject_fault: Option<f64>,
}

/// Result of a full verification pass on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VerifyRun {
    pub checks: RatioReport,
    pub brackets: Vec<Bracket>,
    /// Large-regime sweep: its minimum ratio and the minimum of
    /// `sandwich lower bound / envelope` over the same points.
    pub large_min_ratio: Option<f64>,
    pub large_sandwich_floor: Option<f64>,
}

fn ln_bracket(entries: &[(PointQuery, Option<f64>)], oracle: &str, envelope: &str, grid: String) -> Result<Bracket> {
    let report = RatioReport::from_ln_ratios(entries, Vec::new())?;
    Ok(Bracket::from_report(oracle, envelope, grid, &report))
}

/// `estimate_small / estimate_large` on the seam `xy = t`, along every
/// `(t, x)` grid line that crosses it inside the `y` range.
pub fn seam_bracket(grid: &GridSpec) -> Result<Bracket> {
    let mut entries = Vec::new();
    for &t in &grid.t.points() {
        for &x in &grid.x.points() {
            let y = t / x;
            if y > 1.0 && y >= grid.y.lo && y <= grid.y.hi {
                let r = envelopes::ln_small_unchecked(t, x, y) - envelopes::ln_large_unchecked(t, x, y);
                entries.push((PointQuery::unit(t, x, y), Some(r)));
            }
        }
    }
    ln_bracket(
        &entries,
        Envelope::Small.name(),
        Envelope::Large.name(),
        format!("{};seam", grid.with_filter(RegimeFilter::All).canonical()),
    )
}

/// Cross-bracket between two envelopes on the points of `grid`.
pub fn envelope_bracket(grid: &GridSpec, num: Envelope, den: Envelope) -> Result<Bracket> {
    let entries = grid
        .points()
        .iter()
        .map(|p| Ok((*p, Some(num.ln_eval(p)? - den.ln_eval(p)?))))
        .collect::<Result<Vec<_>>>()?;
    ln_bracket(&entries, num.name(), den.name(), grid.canonical())
}

/// `q_oracle / q_estimate_profile` on a 20 x 20 log grid,
/// `x` in `[1.001, 1000]`, `s` in `[1e-3, 1e6]`.
pub fn hitting_density_bracket(cfg: &QuadCfg) -> Result<Bracket> {
    let xs = Axis { lo: 1.001, hi: 1e3, n: 20 };
    let ss = Axis { lo: 1e-3, hi: 1e6, n: 20 };
    let pairs: Vec<(f64, f64)> =
        xs.points().iter().flat_map(|&x| ss.points().into_iter().map(move |s| (x, s))).collect();
    let vals = crate::par::map(&pairs, |&(x, s)| hitting::ln_q_oracle(x, s, cfg));
    let entries: Vec<_> = pairs
        .iter()
        .zip(vals)
        .map(|(&(x, s), v)| {
            let r = v.ok().filter(|v| v.rel_err <= sweep::SKIP_REL_ERROR).map(|v| v.ln_value - hitting::ln_q_profile(x, s));
            (PointQuery::unit(s, x, x), r)
        })
        .collect();
    ln_bracket(&entries, "q_oracle", "q_estimate_profile", format!("x={xs};s={ss}"))
}

/// `survival_oracle / survival_estimate_profile` at `x = 2` for
/// `t` in `[1e-2, 1e8]` (41 log points).
pub fn survival_bracket(cfg: &QuadCfg) -> Result<Bracket> {
    let x = 2.0;
    let ts = Axis { lo: 1e-2, hi: 1e8, n: 41 };
    let pts = ts.points();
    let vals = crate::par::map(&pts, |&t| hitting::survival_with_err(x, t, cfg));
    let mut entries = Vec::with_capacity(pts.len());
    for (&t, v) in pts.iter().zip(vals) {
        let profile = hitting::survival_estimate_profile(x, t)?;
        let r = v.ok().filter(|(s, e)| *e <= sweep::SKIP_REL_ERROR * s).map(|(s, _)| (s / profile).ln());
        entries.push((PointQuery::unit(t, x, x), r));
    }
    ln_bracket(&entries, "survival_oracle", "survival_estimate_profile", format!("x={x:?};t={ts}"))
}

/// Checks every exact inequality on `grid` and measures all frozen
/// brackets, evaluating the last-exit oracle once. `grid.filter` is ignored.
pub fn run(grid: &GridSpec, cfg: &VerifyCfg) -> Result<VerifyRun> {
    let grid = grid.with_filter(RegimeFilter::All);
    grid.validate()?;
    let ev = sweep::hunt_evaluator(&grid, cfg)?;
    let table = sweep::hunt_table(&grid, &ev, cfg)?;
    let checks = check_table(&table, &ev)?;

    let small = grid.with_filter(RegimeFilter::Small);
    let large = grid.with_filter(RegimeFilter::Large);
    let mut brackets = Vec::new();
    let mut large_min_ratio = None;
    let mut large_sandwich_floor = None;
    for (env, g) in [(Envelope::Small, small), (Envelope::Large, large), (Envelope::Unified, grid)] {
        if g.points().is_empty() {
            continue;
        }
        let out = sweep_table(&table, env, g.filter)?;
        if env == Envelope::Large {
            large_min_ratio = Some(out.report.min_ratio);
            large_sandwich_floor = out.report.sandwich_floor;
        }
        brackets.push(Bracket::from_report(Oracle::Hunt.name(), env.name(), g.canonical(), &out.report));
    }
    let mu = ratio_sweep(&grid, Oracle::MuHalf, Envelope::Mu, cfg)?;
    brackets.push(Bracket::from_report(Oracle::MuHalf.name(), Envelope::Mu.name(), grid.canonical(), &mu.report));
    for (den, g) in [(Envelope::Small, small), (Envelope::Large, large)] {
        if !g.points().is_empty() {
            brackets.push(envelope_bracket(&g, Envelope::Unified, den)?);
        }
    }
    if let Ok(b) = seam_bracket(&grid) {
        brackets.push(b);
    }
    brackets.push(hitting_density_bracket(&cfg.quad)?);
    brackets.push(survival_bracket(&cfg.quad)?);
    Ok(VerifyRun { checks, brackets, large_min_ratio, large_sandwich_floor })
}

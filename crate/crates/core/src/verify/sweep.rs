//! Oracle tables and ratio sweeps.

use super::envelopes::{ln_estimate_large, ln_estimate_mu, ln_estimate_small, ln_estimate_unified};
use super::grid::{GridSpec, RegimeFilter};
use super::VerifyCfg;
use crate::error::{HkError, Result};
use crate::kernels::{ln_free_kernel, ln_p0, PointQuery};
use crate::killed::{ln_killed_kernel_mu_half, ln_sandwich_lower, HuntEvaluator};
use crate::mc::{self, McConfig};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Points whose oracle error exceeds this fraction of the value are skipped.
pub const SKIP_REL_ERROR: f64 = 0.1;
/// Absolute slack added to every exact inequality.
pub const SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Last-exit quadrature for the 2-d kernel.
    Hunt,
    /// Monte Carlo histogram (bin averages).
    Mc,
    /// Exact index-1/2 kernel.
    MuHalf,
}

impl Oracle {
    pub fn name(&self) -> &'static str {
        match self {
            Oracle::Hunt => "hunt",
            Oracle::Mc => "mc",
            Oracle::MuHalf => "mu_half",
        }
    }
}

impl fmt::Display for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Oracle {
    type Err = HkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hunt" => Ok(Oracle::Hunt),
            "mc" => Ok(Oracle::Mc),
            "mu-half" | "mu_half" => Ok(Oracle::MuHalf),
            _ => Err(HkError::Config(format!("unknown oracle {s:?} (expected hunt, mc or mu-half)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Small,
    Large,
    /// Barrier-1 single-formula envelope.
    Unified,
    /// Index-1/2 envelope.
    Mu,
}

impl Envelope {
    pub fn name(&self) -> &'static str {
        match self {
            Envelope::Small => "estimate_small",
            Envelope::Large => "estimate_large",
            Envelope::Unified => "estimate_unified",
            Envelope::Mu => "estimate_mu",
        }
    }

    pub fn ln_eval(&self, p: &PointQuery) -> Result<f64> {
        match self {
            Envelope::Small => ln_estimate_small(p.t, p.x, p.y),
            Envelope::Large => ln_estimate_large(p.t, p.x, p.y),
            Envelope::Unified => ln_estimate_unified(1.0, p.t, p.x, p.y),
            Envelope::Mu => ln_estimate_mu(0.5, p.t, p.x, p.y),
        }
    }

    /// Rejects envelope, oracle and filter combinations that do not make sense.
    pub fn check_compatible(&self, oracle: Oracle, filter: RegimeFilter) -> Result<()> {
        let regime_ok = match self {
            Envelope::Small => filter.within_small(),
            Envelope::Large => filter == RegimeFilter::Large,
            Envelope::Unified | Envelope::Mu => true,
        };
        if !regime_ok {
            return Err(HkError::Config(format!("envelope {} is not defined on the {filter} regime", self.name())));
        }
        let index_ok = match oracle {
            Oracle::Hunt => *self != Envelope::Mu,
            Oracle::MuHalf => *self == Envelope::Mu,
            Oracle::Mc => true,
        };
        if !index_ok {
            return Err(HkError::Config(format!("oracle {oracle} cannot be compared with {}", self.name())));
        }
        Ok(())
    }
}

impl fmt::Display for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Envelope {
    type Err = HkError;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("estimate_").unwrap_or(s) {
            "small" => Ok(Envelope::Small),
            "large" => Ok(Envelope::Large),
            "unified" => Ok(Envelope::Unified),
            "mu" => Ok(Envelope::Mu),
            _ => Err(HkError::Config(format!("unknown envelope {s:?} (expected small, large, unified or mu)"))),
        }
    }
}

/// One oracle evaluation. `failure` is set when the oracle could not produce
/// a value; `err_bound` then holds whatever bound is known (for a cancelled
/// subtraction, the upper end of the bracket `[0, err_bound]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePoint {
    pub value: f64,
    pub ln_value: f64,
    pub err_bound: f64,
    pub rel_error: f64,
    pub failure: Option<String>,
}

impl OraclePoint {
    fn ok(ln_value: f64, rel_error: f64) -> Self {
        let value = ln_value.exp();
        OraclePoint { value, ln_value, err_bound: value * rel_error, rel_error, failure: None }
    }

    fn failed(err: &HkError) -> Self {
        let bound = match err {
            HkError::Cancellation { upper } => *upper,
            _ => f64::INFINITY,
        };
        OraclePoint {
            value: 0.0,
            ln_value: f64::NEG_INFINITY,
            err_bound: bound,
            rel_error: f64::INFINITY,
            failure: Some(err.to_string()),
        }
    }

    /// Usable for a ratio: evaluated and accurate to [`SKIP_REL_ERROR`].
    pub fn usable(&self) -> bool {
        self.failure.is_none() && self.rel_error <= SKIP_REL_ERROR && self.ln_value.is_finite()
    }
}

/// Oracle values at every point of a grid, in canonical order.
#[derive(Clone, Debug)]
pub struct OracleTable {
    pub oracle: Oracle,
    pub grid: GridSpec,
    pub points: Vec<PointQuery>,
    pub values: Vec<OraclePoint>,
}

/// Builds the last-exit evaluator used for a grid: densities tabulated for
/// every axis value that can serve as a starting point.
pub fn hunt_evaluator(grid: &GridSpec, cfg: &VerifyCfg) -> Result<HuntEvaluator> {
    let mut starts = grid.x.points();
    starts.extend(grid.y.points());
    HuntEvaluator::with_tables(&cfg.quad, &starts, grid.t.hi)
}

/// Hunt oracle on `grid`, reusing `ev`. A configured fault factor multiplies
/// every value.
pub fn hunt_table(grid: &GridSpec, ev: &HuntEvaluator, cfg: &VerifyCfg) -> Result<OracleTable> {
    let points = grid.points();
    let ln_fault = cfg.inject_fault.map_or(0.0, f64::ln);
    let results = crate::par::map(&points, |p| ev.eval(p.t, p.x, p.y));
    let mut values = Vec::with_capacity(points.len());
    for r in results {
        values.push(match r {
            Ok(v) => OraclePoint::ok(v.ln_value + ln_fault, v.rel_error),
            Err(e @ (HkError::Cancellation { .. } | HkError::Quadrature { .. } | HkError::Inversion { .. })) => {
                OraclePoint::failed(&e)
            }
            Err(e) => return Err(e),
        });
    }
    Ok(OracleTable { oracle: Oracle::Hunt, grid: *grid, points, values })
}

fn mu_half_table(grid: &GridSpec) -> Result<OracleTable> {
    let points = grid.points();
    let values = points
        .iter()
        .map(|p| {
            let ln = ln_killed_kernel_mu_half(p.t, p.x, p.y)?;
            Ok(OraclePoint::ok(ln, 16.0 * f64::EPSILON * (1.0 + ln.abs())))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleTable { oracle: Oracle::MuHalf, grid: *grid, points, values })
}

/// Monte Carlo oracle: one histogram per `(t, x)` line, with `dt` capped at
/// `t/200`. Each point gets the average over its bin; points beyond `r_max`
/// are reported as failures.
fn mc_table(grid: &GridSpec, dim: usize, cfg: &McConfig) -> Result<OracleTable> {
    let points = grid.points();
    let mut lines: Vec<(f64, f64)> = points.iter().map(|p| (p.t, p.x)).collect();
    lines.dedup();
    let hists = crate::par::map(&lines, |&(t, x)| {
        let c = McConfig { dt: cfg.dt.min(t / 200.0), ..*cfg };
        mc::estimate_kernel_histogram(dim, x, t, &c)
    });
    let mut values = Vec::with_capacity(points.len());
    let mut line = 0;
    for p in &points {
        while (lines[line].0, lines[line].1) != (p.t, p.x) {
            line += 1;
        }
        let hist = hists[line].as_ref().map_err(Clone::clone)?;
        let bin = hist.bins.iter().find(|b| p.y > b.y_lo && p.y <= b.y_hi);
        values.push(match bin {
            Some(b) if b.p_hat > 0.0 => OraclePoint::ok(b.p_hat.ln(), b.stderr / b.p_hat),
            Some(b) => OraclePoint {
                value: 0.0,
                ln_value: f64::NEG_INFINITY,
                err_bound: b.upper95.unwrap_or(0.0),
                rel_error: f64::INFINITY,
                failure: Some("no paths in bin".into()),
            },
            None => OraclePoint::failed(&HkError::Domain(format!("y = {} is beyond r_max", p.y))),
        });
    }
    Ok(OracleTable { oracle: Oracle::Mc, grid: *grid, points, values })
}

/// Oracle values on `grid`. The Monte Carlo oracle simulates in dimension
/// `dim` (2 for index 0, 3 for index 1/2).
pub fn oracle_table(grid: &GridSpec, oracle: Oracle, dim: usize, cfg: &VerifyCfg) -> Result<OracleTable> {
    grid.validate()?;
    match oracle {
        Oracle::Hunt => hunt_table(grid, &hunt_evaluator(grid, cfg)?, cfg),
        Oracle::MuHalf => mu_half_table(grid),
        Oracle::Mc => mc_table(grid, dim, &cfg.mc),
    }
}

/// A failed inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub point: PointQuery,
    pub description: String,
}

/// Extremal ratios over a grid together with skipped points and violations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: PointQuery,
    pub argmax: PointQuery,
    pub n_points: usize,
    pub n_skipped: usize,
    pub skipped: Vec<PointQuery>,
    pub violations: Vec<Violation>,
    /// For the last-exit oracle against the large-regime envelope: the
    /// smallest `sandwich lower bound / envelope` over the ratio points.
    pub sandwich_floor: Option<f64>,
}

impl RatioReport {
    /// Report over `(point, ln ratio)` pairs; `None` marks skipped points.
    /// Ties keep the first point in canonical order.
    pub fn from_ln_ratios(entries: &[(PointQuery, Option<f64>)], violations: Vec<Violation>) -> Result<Self> {
        let mut best: Option<(usize, usize)> = None;
        let mut skipped = Vec::new();
        for (k, (p, r)) in entries.iter().enumerate() {
            let Some(r) = *r else {
                skipped.push(*p);
                continue;
            };
            best = Some(match best {
                None => (k, k),
                Some((lo, hi)) => {
                    let lo = if r < entries[lo].1.unwrap_or(f64::NAN) { k } else { lo };
                    let hi = if r > entries[hi].1.unwrap_or(f64::NAN) { k } else { hi };
                    (lo, hi)
                }
            });
        }
        let Some((lo, hi)) = best else {
            return Err(HkError::EmptyGrid(format!(
                "no usable points ({} of {} skipped)",
                skipped.len(),
                entries.len()
            )));
        };
        Ok(RatioReport {
            min_ratio: entries[lo].1.unwrap_or(f64::NAN).exp(),
            max_ratio: entries[hi].1.unwrap_or(f64::NAN).exp(),
            argmin: entries[lo].0,
            argmax: entries[hi].0,
            n_points: entries.len(),
            n_skipped: skipped.len(),
            skipped,
            violations,
            sandwich_floor: None,
        })
    }
}

/// One CSV row of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: PointQuery,
    pub oracle: f64,
    pub envelope: f64,
    /// `oracle / envelope`, computed from logarithms; `NaN` when skipped.
    pub ratio: f64,
    pub err_bound: f64,
    pub skipped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub report: RatioReport,
}

/// Bounds checks available from a single oracle value.
pub(super) fn pointwise_violations(oracle: Oracle, p: &PointQuery, v: &OraclePoint) -> Result<Vec<Violation>> {
    let mut out = Vec::new();
    if !v.usable() {
        return Ok(out);
    }
    let tol = (1.0 + v.rel_error + SLACK).ln();
    let mut fail = |what: String| out.push(Violation { point: *p, description: what });
    match oracle {
        Oracle::Hunt => {
            let ln_p = ln_p0(p.t, p.x, p.y);
            if v.ln_value > ln_p + tol {
                fail(format!("p_1 exceeds p: ln p_1 - ln p = {:e}", v.ln_value - ln_p));
            }
            let ln_lower = ln_sandwich_lower(p.t, p.x, p.y)?;
            if ln_lower > v.ln_value + tol {
                fail(format!("sandwich lower bound exceeds p_1 by {:e} in log", ln_lower - v.ln_value));
            }
            if p.t <= 4.0 && v.ln_value + (1.0 - v.rel_error.min(1.0)).ln() > ln_lower + 0.5 + SLACK {
                fail(format!("p_1 exceeds e^(1/2) times the sandwich lower bound: excess {:e} in log", v.ln_value - ln_lower - 0.5));
            }
        }
        Oracle::MuHalf => {
            let ln_free = ln_free_kernel(0.5, p.t, p.x, p.y)?;
            if v.ln_value > ln_free + tol {
                fail(format!("index-1/2 killed kernel exceeds the free kernel by {:e} in log", v.ln_value - ln_free));
            }
        }
        Oracle::Mc => {}
    }
    Ok(out)
}

/// Compares a table against an envelope on the points kept by `filter`.
pub fn sweep_table(table: &OracleTable, envelope: Envelope, filter: RegimeFilter) -> Result<SweepOutput> {
    envelope.check_compatible(table.oracle, filter)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut violations = Vec::new();
    let mut floor: Option<f64> = None;
    for (p, v) in table.points.iter().zip(&table.values) {
        if !filter.keeps(p.t, p.x, p.y) {
            continue;
        }
        let ln_env = envelope.ln_eval(p)?;
        violations.extend(pointwise_violations(table.oracle, p, v)?);
        let ln_ratio = v.usable().then(|| v.ln_value - ln_env);
        if ln_ratio.is_some() && table.oracle == Oracle::Hunt && envelope == Envelope::Large {
            let r = (ln_sandwich_lower(p.t, p.x, p.y)? - ln_env).exp();
            floor = Some(floor.map_or(r, |f| f.min(r)));
        }
        rows.push(SweepRow {
            point: *p,
            oracle: v.value,
            envelope: ln_env.exp(),
            ratio: ln_ratio.map_or(f64::NAN, f64::exp),
            err_bound: v.err_bound,
            skipped: ln_ratio.is_none(),
        });
        entries.push((*p, ln_ratio));
    }
    let mut report = RatioReport::from_ln_ratios(&entries, violations)?;
    report.sandwich_floor = floor;
    Ok(SweepOutput { rows, report })
}

/// Evaluates `oracle` and `envelope` at every point of `grid`.
pub fn ratio_sweep(grid: &GridSpec, oracle: Oracle, envelope: Envelope, cfg: &VerifyCfg) -> Result<SweepOutput> {
    envelope.check_compatible(oracle, grid.filter)?;
    let dim = if envelope == Envelope::Mu { 3 } else { 2 };
    let table = oracle_table(grid, oracle, dim, cfg)?;
    sweep_table(&table, envelope, grid.filter)
}

//! Exact inequalities that every oracle value must satisfy.
//!
//! * `I_0(z2)/I_0(z1) <= e^{z2 - z1}` for `z2 > z1 > 0`, i.e. `e^{-z} I_0(z)`
//!   is nonincreasing, checked on consecutive values of `z = xy/t`;
//! * `z/(z+2) <= I_1(z)/I_0(z) <= 2z/(2z+1)`;
//! * `∂_x p / (x (y/t)^2 p)` lies in `[1/12, 2]` when `xy <= t`, `y^2 >= 4t`;
//! * `x -> p(t, x, y)` is increasing when `y^2 >= 4t`, `1 < x < y/2`;
//! * `p_1 <= p`, and the sandwich by the index-1/2 kernel;
//! * `q_x(s)` is above its explicit lower bound.
//!
//! All comparisons allow the oracle's own error bound plus `1e-12`.

use super::grid::GridSpec;
use super::sweep::{hunt_evaluator, hunt_table, pointwise_violations, Oracle, OracleTable, RatioReport, Violation, SLACK};
use super::VerifyCfg;
use crate::error::Result;
use crate::hitting;
use crate::kernels::{free_kernel, free_kernel_dx, ln_free_kernel, PointQuery};
use crate::killed::{ln_sandwich_lower, HuntEvaluator};
use crate::specfun;

fn bessel_checks(points: &[PointQuery], out: &mut Vec<Violation>) -> Result<()> {
    let mut zs: Vec<(f64, PointQuery)> = points.iter().map(|p| (p.x * p.y / p.t, *p)).collect();
    zs.sort_by(|a, b| a.0.total_cmp(&b.0));
    zs.dedup_by(|b, a| a.0 == b.0);
    let mut prev: Option<(f64, f64)> = None;
    for &(z, p) in &zs {
        let i0s = specfun::bessel_i0_scaled(z)?;
        let i1s = specfun::bessel_i1_scaled(z)?;
        let r = i1s / i0s;
        if r < z / (z + 2.0) - SLACK || r > 2.0 * z / (2.0 * z + 1.0) + SLACK {
            out.push(Violation { point: p, description: format!("I_1/I_0 = {r:e} outside its bounds at z = {z:e}") });
        }
        if let Some((z1, i0s1)) = prev {
            if i0s > i0s1 * (1.0 + SLACK) {
                out.push(Violation {
                    point: p,
                    description: format!("I_0({z:e})/I_0({z1:e}) exceeds e^(z2 - z1): scaled values {i0s:e} > {i0s1:e}"),
                });
            }
        }
        prev = Some((z, i0s));
    }
    Ok(())
}

fn derivative_checks(grid: &GridSpec, out: &mut Vec<Violation>) -> Result<()> {
    let xs = grid.x.points();
    let ys = grid.y.points();
    for &t in &grid.t.points() {
        for &y in &ys {
            if y * y < 4.0 * t {
                continue;
            }
            let mut prev: Option<(f64, f64)> = None;
            for &x in &xs {
                if !grid.filter.keeps(t, x, y) {
                    continue;
                }
                let point = PointQuery::unit(t, x, y);
                let p = free_kernel(0.0, t, x, y)?;
                let dx = free_kernel_dx(t, x, y)?;
                if x * y <= t {
                    let r = dx / (x * (y / t).powi(2) * p);
                    if !(1.0 / 12.0 - SLACK..=2.0 + SLACK).contains(&r) {
                        out.push(Violation {
                            point,
                            description: format!("derivative ratio {r:e} outside [1/12, 2]"),
                        });
                    }
                }
                if 2.0 * x < y {
                    if dx < 0.0 || (p > 0.0 && dx <= 0.0) {
                        out.push(Violation { point, description: format!("x -> p not increasing: dp/dx = {dx:e}") });
                    }
                    let ln_p = ln_free_kernel(0.0, t, x, y)?;
                    if let Some((x0, ln0)) = prev {
                        if ln_p < ln0 - SLACK {
                            out.push(Violation {
                                point,
                                description: format!("p(t, {x0}, y) > p(t, {x}, y): ln difference {:e}", ln0 - ln_p),
                            });
                        }
                    }
                    prev = Some((x, ln_p));
                }
            }
        }
    }
    Ok(())
}

fn killed_checks(table: &OracleTable, out: &mut Vec<Violation>) -> Result<Vec<(PointQuery, Option<f64>)>> {
    let mut ratios = Vec::with_capacity(table.points.len());
    for (p, v) in table.points.iter().zip(&table.values) {
        let ln_p = ln_free_kernel(0.0, p.t, p.x, p.y)?;
        out.extend(pointwise_violations(Oracle::Hunt, p, v)?);
        if v.usable() {
            ratios.push((*p, Some(v.ln_value - ln_p)));
        } else {
            let ln_lower = ln_sandwich_lower(p.t, p.x, p.y)?;
            // a bracket [0, upper] must still contain the lower bound
            if v.err_bound.is_finite() && ln_lower > v.err_bound.ln() + SLACK {
                out.push(Violation {
                    point: *p,
                    description: format!(
                        "sandwich lower bound {:e} exceeds the oracle bracket [0, {:e}]",
                        ln_lower.exp(),
                        v.err_bound
                    ),
                });
            }
            ratios.push((*p, None));
        }
    }
    Ok(ratios)
}

fn hitting_checks(grid: &GridSpec, ev: &HuntEvaluator, out: &mut Vec<Violation>) -> Result<()> {
    let ts = grid.t.points();
    let pairs: Vec<(f64, f64)> = grid.x.points().iter().flat_map(|&x| ts.iter().map(move |&s| (x, s))).collect();
    let qs = crate::par::map(&pairs, |&(x, s)| ev.ln_q(x, s));
    for (&(x, s), q) in pairs.iter().zip(qs) {
        let (ln_q, err) = match q {
            Ok(v) => v,
            Err(_) => continue,
        };
        let ln_lower = hitting::ln_q_lower_bound(x, s)?;
        if ln_lower > ln_q + (1.0 + err + SLACK).ln() {
            out.push(Violation {
                point: PointQuery::unit(s, x, x),
                description: format!(
                    "q_x(s) below its lower bound at x = {x}, s = {s}: ln q - ln bound = {:e}",
                    ln_q - ln_lower
                ),
            });
        }
    }
    Ok(())
}

/// Runs every exact inequality against an existing last-exit table. The
/// report's ratio is `p_1 / p`.
pub fn check_table(table: &OracleTable, ev: &HuntEvaluator) -> Result<RatioReport> {
    let grid = &table.grid;
    let mut violations = Vec::new();
    bessel_checks(&table.points, &mut violations)?;
    derivative_checks(grid, &mut violations)?;
    let ratios = killed_checks(table, &mut violations)?;
    hitting_checks(grid, ev, &mut violations)?;
    RatioReport::from_ln_ratios(&ratios, violations)
}

/// [`check_table`] on a freshly computed last-exit table.
pub fn check_inequalities(grid: &GridSpec, cfg: &VerifyCfg) -> Result<RatioReport> {
    grid.validate()?;
    let ev = hunt_evaluator(grid, cfg)?;
    let table = hunt_table(grid, &ev, cfg)?;
    check_table(&table, &ev)
}

//! Frozen ratio brackets.
//!
//! The first full run stores the empirical min/max ratios per
//! `(oracle, envelope, grid)`; later runs must stay within a factor 1.05 of
//! both ends.

use super::sweep::RatioReport;
use crate::error::{HkError, Result};
use crate::kernels::PointQuery;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Allowed drift of either end of a bracket, as `|ln(new / frozen)|`.
pub const LN_DRIFT: f64 = 0.048_790_164_169_432_05; // ln 1.05

/// An empirical ratio bracket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub oracle: String,
    pub envelope: String,
    /// Canonical description of the point set.
    pub grid: String,
    pub grid_hash: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: PointQuery,
    pub argmax: PointQuery,
    pub n_points: usize,
    pub n_skipped: usize,
}

impl Bracket {
    pub fn from_report(oracle: &str, envelope: &str, grid: String, r: &RatioReport) -> Self {
        Bracket {
            oracle: oracle.into(),
            envelope: envelope.into(),
            grid_hash: super::grid::fnv1a(grid.as_bytes()),
            grid,
            min_ratio: r.min_ratio,
            max_ratio: r.max_ratio,
            argmin: r.argmin,
            argmax: r.argmax,
            n_points: r.n_points,
            n_skipped: r.n_skipped,
        }
    }

    pub fn finite(&self) -> bool {
        self.min_ratio > 0.0 && self.max_ratio.is_finite() && self.min_ratio <= self.max_ratio
    }
}

/// One record of the baseline file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub envelope: String,
    pub oracle: String,
    /// FNV-1a hash of the canonical grid, as 16 hex digits.
    pub grid_hash: String,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub created_at: String,
}

fn hex(h: u64) -> String {
    format!("{h:016x}")
}

impl BaselineEntry {
    fn matches(&self, b: &Bracket) -> bool {
        self.oracle == b.oracle && self.envelope == b.envelope && self.grid_hash == hex(b.grid_hash)
    }
}

pub fn load(path: &Path) -> Result<Vec<BaselineEntry>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(HkError::BaselineMissing(format!("{} does not exist", path.display())))
        }
        Err(e) => return Err(HkError::Io(format!("{}: {e}", path.display()))),
    };
    serde_json::from_str(&text).map_err(|e| HkError::Io(format!("{} is not a baseline file: {e}", path.display())))
}

pub fn save(path: &Path, entries: &[BaselineEntry]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HkError::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut text = crate::json::to_string_pretty(entries);
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HkError::Io(format!("{}: {e}", path.display())))
}

/// `existing` with the entries for `brackets` replaced, sorted for a stable
/// file layout.
pub fn updated(existing: &[BaselineEntry], brackets: &[Bracket], created_at: &str) -> Vec<BaselineEntry> {
    let mut out: Vec<BaselineEntry> =
        existing.iter().filter(|e| !brackets.iter().any(|b| e.matches(b))).cloned().collect();
    out.extend(brackets.iter().map(|b| BaselineEntry {
        envelope: b.envelope.clone(),
        oracle: b.oracle.clone(),
        grid_hash: hex(b.grid_hash),
        min_ratio: b.min_ratio,
        max_ratio: b.max_ratio,
        created_at: created_at.into(),
    }));
    out.sort_by(|a, b| (&a.oracle, &a.envelope, &a.grid_hash).cmp(&(&b.oracle, &b.envelope, &b.grid_hash)));
    out
}

/// Drift messages for brackets outside their frozen values. A bracket with
/// no frozen entry is an error.
pub fn compare(entries: &[BaselineEntry], brackets: &[Bracket]) -> Result<Vec<String>> {
    let mut drift = Vec::new();
    for b in brackets {
        let Some(e) = entries.iter().find(|e| e.matches(b)) else {
            return Err(HkError::BaselineMissing(format!(
                "no frozen bracket for {} / {} on grid {:016x}",
                b.oracle, b.envelope, b.grid_hash
            )));
        };
        for (what, new, old) in [("min", b.min_ratio, e.min_ratio), ("max", b.max_ratio, e.max_ratio)] {
            let d = (new / old).ln();
            if !(d.abs() <= LN_DRIFT) {
                drift.push(format!(
                    "{} / {}: {what}_ratio {new:e} drifted from frozen {old:e} (ln ratio {d:+.4})",
                    b.oracle, b.envelope
                ));
            }
        }
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bracket(min: f64, max: f64) -> Bracket {
        let p = PointQuery::unit(1.0, 2.0, 2.0);
        Bracket {
            oracle: "hunt".into(),
            envelope: "estimate_small".into(),
            grid: "g".into(),
            grid_hash: 7,
            min_ratio: min,
            max_ratio: max,
            argmin: p,
            argmax: p,
            n_points: 1,
            n_skipped: 0,
        }
    }

    #[test]
    fn drift_protocol() {
        let frozen = updated(&[], &[bracket(0.5, 2.0)], "now");
        assert!(compare(&frozen, &[bracket(0.51, 2.05)]).unwrap().is_empty());
        assert_eq!(compare(&frozen, &[bracket(0.4, 2.0)]).unwrap().len(), 1);
        assert_eq!(compare(&frozen, &[bracket(0.4, 3.0)]).unwrap().len(), 2);
        let mut other = bracket(0.5, 2.0);
        other.grid_hash = 8;
        assert!(matches!(compare(&frozen, &[other.clone()]), Err(HkError::BaselineMissing(_))));
        let both = updated(&frozen, &[other, bracket(0.6, 2.0)], "later");
        assert_eq!(both.len(), 2);
        assert_eq!(both[0].min_ratio, 0.6);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/base.json");
        assert!(matches!(load(&path), Err(HkError::BaselineMissing(_))));
        let entries = updated(&[], &[bracket(1.0 / 3.0, 2.0)], "2026-01-01T00:00:00Z");
        save(&path, &entries).unwrap();
        assert_eq!(load(&path).unwrap(), entries);
    }
}

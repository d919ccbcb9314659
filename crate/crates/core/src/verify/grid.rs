//! Logarithmic `(t, x, y)` grids with regime filters.

use crate::error::{HkError, Result};
use crate::kernels::PointQuery;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// `n` logarithmically spaced points from `lo` to `hi`, endpoints exact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let axis = Axis { lo, hi, n };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_finite() && self.hi.is_finite() && 0.0 < self.lo
            && ((self.lo < self.hi && self.n >= 2) || (self.lo == self.hi && self.n == 1))
        {
            Ok(())
        } else {
            Err(HkError::Config(format!("invalid axis {}:{}:{}", self.lo, self.hi, self.n)))
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.lo.ln(), self.hi.ln());
        let last = self.n - 1;
        (0..self.n)
            .map(|k| match k {
                0 => self.lo,
                k if k == last => self.hi,
                k => (a + (b - a) * k as f64 / last as f64).exp(),
            })
            .collect()
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.lo, self.hi, self.n)
    }
}

impl FromStr for Axis {
    type Err = HkError;

    /// Parses `lo:hi:n`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || HkError::Config(format!("axis must look like lo:hi:n, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        Axis::new(lo, hi, n)
    }
}

/// Which part of the parameter space a grid keeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeFilter {
    All,
    /// `xy <= t`; the boundary belongs here.
    Small,
    /// `xy > t`.
    Large,
    /// `xy < t` and `y^2 <= m t`.
    Prop31 { m: f64 },
    /// `xy < t` and `y^2 >= 16 t`.
    Prop32,
}

impl RegimeFilter {
    pub fn keeps(&self, t: f64, x: f64, y: f64) -> bool {
        let xy = x * y;
        match *self {
            RegimeFilter::All => true,
            RegimeFilter::Small => xy <= t,
            RegimeFilter::Large => xy > t,
            RegimeFilter::Prop31 { m } => xy < t && y * y <= m * t,
            RegimeFilter::Prop32 => xy < t && y * y >= 16.0 * t,
        }
    }

    /// True if every kept point satisfies `xy <= t`.
    pub fn within_small(&self) -> bool {
        !matches!(self, RegimeFilter::All | RegimeFilter::Large)
    }
}

impl fmt::Display for RegimeFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegimeFilter::All => f.write_str("all"),
            RegimeFilter::Small => f.write_str("small"),
            RegimeFilter::Large => f.write_str("large"),
            RegimeFilter::Prop31 { m } => write!(f, "prop31:{m:?}"),
            RegimeFilter::Prop32 => f.write_str("prop32"),
        }
    }
}

impl FromStr for RegimeFilter {
    type Err = HkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(RegimeFilter::All),
            "small" => Ok(RegimeFilter::Small),
            "large" => Ok(RegimeFilter::Large),
            "prop32" => Ok(RegimeFilter::Prop32),
            _ => match s.strip_prefix("prop31:").map(str::parse::<f64>) {
                Some(Ok(m)) if m.is_finite() && m > 0.0 => Ok(RegimeFilter::Prop31 { m }),
                _ => Err(HkError::Config(format!(
                    "unknown regime {s:?} (expected all, small, large, prop31:<m> or prop32)"
                ))),
            },
        }
    }
}

/// A filtered tensor grid over `(t, x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub t: Axis,
    pub x: Axis,
    pub y: Axis,
    pub filter: RegimeFilter,
}

impl Default for GridSpec {
    /// 40 log points per axis: `t` in `[1e-3, 1e6]`, `x, y` in `[1.001, 1000]`.
    fn default() -> Self {
        let space = Axis { lo: 1.001, hi: 1e3, n: 40 };
        GridSpec { t: Axis { lo: 1e-3, hi: 1e6, n: 40 }, x: space, y: space, filter: RegimeFilter::All }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        self.t.validate()?;
        self.x.validate()?;
        self.y.validate()?;
        if self.x.lo <= 1.0 || self.y.lo <= 1.0 {
            return Err(HkError::Config("x and y axes must lie above the barrier 1".into()));
        }
        Ok(())
    }

    /// Same axes, different filter.
    pub fn with_filter(&self, filter: RegimeFilter) -> Self {
        GridSpec { filter, ..*self }
    }

    /// Kept points in canonical order (sorted by `t`, then `x`, then `y`).
    pub fn points(&self) -> Vec<PointQuery> {
        let xs = self.x.points();
        let ys = self.y.points();
        let mut out = Vec::new();
        for &t in &self.t.points() {
            for &x in &xs {
                for &y in &ys {
                    if self.filter.keeps(t, x, y) {
                        out.push(PointQuery::unit(t, x, y));
                    }
                }
            }
        }
        out
    }

    /// Canonical serialisation; also the input of [`GridSpec::hash`].
    pub fn canonical(&self) -> String {
        format!("t={};x={};y={};filter={}", self.t, self.x, self.y, self.filter)
    }

    /// 64-bit FNV-1a hash of [`GridSpec::canonical`].
    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical().as_bytes())
    }

    /// Parses `t=lo:hi:n,x=lo:hi:n,y=lo:hi:n[,filter=...]`; axes not given
    /// keep their defaults.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut grid = GridSpec::default();
        for item in spec.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()) {
            let Some((key, value)) = item.split_once('=') else {
                return Err(HkError::Config(format!("grid item {item:?} is not key=value")));
            };
            match key.trim() {
                "t" => grid.t = value.parse()?,
                "x" => grid.x = value.parse()?,
                "y" => grid.y = value.parse()?,
                "filter" | "regime" => grid.filter = value.parse()?,
                other => return Err(HkError::Config(format!("unknown grid axis {other:?}"))),
            }
        }
        grid.validate()?;
        Ok(grid)
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn axis_endpoints_and_spacing() {
        let a: Axis = "1e-3:1e6:10".parse().unwrap();
        let p = a.points();
        assert_eq!(p[0], 1e-3);
        assert_eq!(p[9], 1e6);
        for w in p.windows(2) {
            assert!((w[1] / w[0] - 10.0).abs() < 1e-12);
        }
        assert!("1:1:3".parse::<Axis>().is_err());
        assert!("1:2".parse::<Axis>().is_err());
    }

    #[test]
    fn filters_partition() {
        let g = GridSpec::parse("t=0.1:100:7,x=1.01:50:6,y=1.01:50:6").unwrap();
        let all = g.points().len();
        let small = g.with_filter(RegimeFilter::Small).points();
        let large = g.with_filter(RegimeFilter::Large).points();
        assert_eq!(small.len() + large.len(), all);
        assert!(small.iter().all(|p| p.x * p.y <= p.t));
        for p in g.with_filter(RegimeFilter::Prop32).points() {
            assert!(p.x * p.y < p.t && p.y * p.y >= 16.0 * p.t);
        }
        assert_eq!(all, 7 * 36);
    }

    #[test]
    fn canonical_round_trip() {
        let g = GridSpec::default().with_filter(RegimeFilter::Prop31 { m: 2704.0 });
        let again = GridSpec::parse(&g.canonical()).unwrap();
        assert_eq!(g, again);
        assert_eq!(g.hash(), again.hash());
        assert_ne!(g.hash(), GridSpec::default().hash());
    }
}

//! Monte Carlo estimates for the Bessel process killed at 1, built on exactly
//! simulated Brownian motion in dimension 2 (index 0) or 3 (index 1/2).
//!
//! The ambient Brownian motion is advanced with exact Gaussian increments, so
//! the radius has the correct law at grid times. Between grid times a path
//! may touch the unit sphere and return; with `bridge_correction` each step
//! multiplies the path weight by the probability `1 - exp(-2 d0 d1 / dt)`
//! that a Brownian bridge between distances `d0`, `d1` from the tangent plane
//! stays on one side. The sphere curves away from the tangent plane, so the
//! corrected estimator still overestimates the kill probability slightly and
//! underestimates survival; without the correction survival is
//! overestimated.
//!
//! Every path draws from its own ChaCha8 stream (stream = path index), and
//! paths are reduced in fixed blocks combined pairwise in index order, so
//! results are bit-identical for any thread count.

use crate::error::{require, HkError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

const BLOCK: u64 = 1024;
const MAX_STEPS: f64 = 1e8;
const MAX_WORK: f64 = 1e13;

/// Monte Carlo run parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub paths: u64,
    /// Requested time step; the horizon is split into `round(t/dt)` equal steps.
    pub dt: f64,
    pub seed: u64,
    /// Number of histogram bins on `(1, r_max]`.
    pub bins: usize,
    pub r_max: f64,
    pub bridge_correction: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            paths: 100_000,
            dt: 0.005,
            seed: 0,
            bins: 40,
            r_max: 10.0,
            bridge_correction: true,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.paths >= 1
            && self.dt.is_finite()
            && self.dt > 0.0
            && self.bins >= 1
            && self.r_max.is_finite()
            && self.r_max > 1.0;
        if ok {
            Ok(())
        } else {
            Err(HkError::Config(format!("invalid Monte Carlo settings {self:?}")))
        }
    }

    fn steps(&self, t: f64) -> Result<u64> {
        let n = (t / self.dt).round().max(1.0);
        if n > MAX_STEPS || n * self.paths as f64 > MAX_WORK {
            return Err(HkError::Config(format!(
                "{} paths of {n} steps exceed the simulation budget",
                self.paths
            )));
        }
        Ok(n as u64)
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub estimate: f64,
    pub stderr: f64,
    pub paths_used: u64,
    pub seed: u64,
}

/// One radial histogram bin. `p_hat` estimates the bin average of the killed
/// kernel with respect to `y^{dim-1} dy`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub y_lo: f64,
    pub y_hi: f64,
    pub y_mid: f64,
    pub p_hat: f64,
    pub stderr: f64,
    /// One-sided 95% upper bound, reported for bins that received no mass.
    pub upper95: Option<f64>,
}

/// Kernel histogram together with the survival estimate of the same paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelHistogram {
    pub bins: Vec<HistogramBin>,
    /// Surviving mass per path that ended beyond `r_max`.
    pub mass_above: f64,
    pub survival: McResult,
}

#[derive(Clone, Debug)]
struct Acc {
    w: Vec<f64>,
    w2: Vec<f64>,
    above: f64,
    above2: f64,
}

impl Acc {
    fn new(bins: usize) -> Self {
        Acc { w: vec![0.0; bins], w2: vec![0.0; bins], above: 0.0, above2: 0.0 }
    }

    fn merge(mut self, other: &Acc) -> Acc {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += b;
        }
        for (a, b) in self.w2.iter_mut().zip(&other.w2) {
            *a += b;
        }
        self.above += other.above;
        self.above2 += other.above2;
        self
    }

    fn total(&self) -> (f64, f64) {
        let mut s = 0.0;
        let mut s2 = 0.0;
        for (w, w2) in self.w.iter().zip(&self.w2) {
            s += w;
            s2 += w2;
        }
        (s + self.above, s2 + self.above2)
    }
}

/// Simulates one path; returns `(weight, final radius)`.
fn simulate_path(dim: usize, x: f64, steps: u64, h: f64, bridge: bool, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let sd = h.sqrt();
    let mut pos = [x, 0.0, 0.0];
    let mut dist = x - 1.0;
    let mut weight = 1.0;
    for _ in 0..steps {
        for c in pos.iter_mut().take(dim) {
            let z: f64 = StandardNormal.sample(rng);
            *c += sd * z;
        }
        let r = pos[..dim].iter().map(|c| c * c).sum::<f64>().sqrt();
        let d1 = r - 1.0;
        if d1 <= 0.0 {
            return (0.0, r);
        }
        if bridge {
            weight *= -(-2.0 * dist * d1 / h).exp_m1();
        }
        dist = d1;
    }
    (weight, dist + 1.0)
}

fn check_args(dim: usize, x: f64, t: f64) -> Result<()> {
    if dim != 2 && dim != 3 {
        return Err(HkError::Domain(format!("dimension must be 2 or 3, got {dim}")));
    }
    require(x > 1.0, "starting radius must exceed 1", x)?;
    require(t > 0.0, "t must be > 0", t)
}

fn run(dim: usize, x: f64, t: f64, cfg: &McConfig) -> Result<Acc> {
    check_args(dim, x, t)?;
    cfg.validate()?;
    let steps = cfg.steps(t)?;
    let h = t / steps as f64;
    let width = (cfg.r_max - 1.0) / cfg.bins as f64;
    let n_blocks = cfg.paths.div_ceil(BLOCK);
    let blocks: Vec<u64> = (0..n_blocks).collect();
    let accs = crate::par::map(&blocks, |&b| {
        let mut acc = Acc::new(cfg.bins);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let end = ((b + 1) * BLOCK).min(cfg.paths);
        for path in b * BLOCK..end {
            rng.set_stream(path);
            rng.set_word_pos(0);
            let (w, r) = simulate_path(dim, x, steps, h, cfg.bridge_correction, &mut rng);
            if w == 0.0 {
                continue;
            }
            if r > cfg.r_max {
                acc.above += w;
                acc.above2 += w * w;
            } else {
                let k = (((r - 1.0) / width) as usize).min(cfg.bins - 1);
                acc.w[k] += w;
                acc.w2[k] += w * w;
            }
        }
        acc
    });
    Ok(pairwise(accs))
}

/// Pairwise reduction in index order; the tree depends only on the count.
fn pairwise(mut accs: Vec<Acc>) -> Acc {
    while accs.len() > 1 {
        let mut next = Vec::with_capacity(accs.len().div_ceil(2));
        let mut it = accs.chunks(2);
        for pair in &mut it {
            next.push(match pair {
                [a, b] => a.clone().merge(b),
                [a] => a.clone(),
                _ => unreachable!(),
            });
        }
        accs = next;
    }
    accs.pop().expect("at least one block")
}

fn mean_and_stderr(sum: f64, sum2: f64, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Estimate of `P_x(T_1 > t)` for the `dim`-dimensional Bessel process.
pub fn simulate_survival(dim: usize, x: f64, t: f64, cfg: &McConfig) -> Result<McResult> {
    let acc = run(dim, x, t, cfg)?;
    let (s, s2) = acc.total();
    let (estimate, stderr) = mean_and_stderr(s, s2, cfg.paths);
    Ok(McResult { estimate, stderr, paths_used: cfg.paths, seed: cfg.seed })
}

/// Radial histogram of surviving paths, normalised by the speed measure
/// `y^{dim-1} dy` so that each bin estimates the bin average of the killed
/// kernel.
pub fn estimate_kernel_histogram(dim: usize, x: f64, t: f64, cfg: &McConfig) -> Result<KernelHistogram> {
    let acc = run(dim, x, t, cfg)?;
    let n = cfg.paths as f64;
    let width = (cfg.r_max - 1.0) / cfg.bins as f64;
    let power = dim as f64;
    let bins = (0..cfg.bins)
        .map(|k| {
            let y_lo = 1.0 + width * k as f64;
            let y_hi = if k + 1 == cfg.bins { cfg.r_max } else { y_lo + width };
            let measure = (y_hi.powf(power) - y_lo.powf(power)) / power;
            let (mean, se) = mean_and_stderr(acc.w[k], acc.w2[k], cfg.paths);
            HistogramBin {
                y_lo,
                y_hi,
                y_mid: 0.5 * (y_lo + y_hi),
                p_hat: mean / measure,
                stderr: se / measure,
                upper95: (acc.w[k] == 0.0).then(|| 3.0 / (n * measure)),
            }
        })
        .collect();
    let (s, s2) = acc.total();
    let (estimate, stderr) = mean_and_stderr(s, s2, cfg.paths);
    Ok(KernelHistogram {
        bins,
        mass_above: acc.above / n,
        survival: McResult { estimate, stderr, paths_used: cfg.paths, seed: cfg.seed },
    })
}

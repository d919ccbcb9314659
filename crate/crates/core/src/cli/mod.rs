//! The `hk` command line.
//!
//! Every command prints one JSON record to stdout. Exit codes: 0 success,
//! 2 usage or configuration, 3 domain, 4 non-convergence or failed
//! verification, 5 I/O, 6 missing baseline.

use crate::error::{HkError, Result};
use crate::hitting;
use crate::kernels::{ln_free_kernel, PointQuery};
use crate::killed::{killed_kernel_mu_half, killed_kernel_scaled, ln_killed_kernel_mu_half, sandwich_bounds};
use crate::mc::{self, McConfig};
use crate::verify::{self, baseline, Axis, Envelope, GridSpec, Oracle, RegimeFilter, VerifyCfg};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const SCHEMA_VERSION: &str = "1";
pub const CSV_HEADER: &str = "t,x,y,oracle,envelope,ratio,err_bound,skipped";
const CURVATURE_NOTE: &str = "the crossing correction uses the tangent plane; the barrier curves away from it, \
so the kill probability is slightly overestimated and survival slightly underestimated";

#[derive(Parser, Debug)]
#[command(name = "hk", version, about = "Heat kernels of the Bessel process killed at 1")]
struct Cli {
    /// Include wall-clock runtime in the diagnostics (breaks bit-identical output).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate one kernel value.
    Eval(EvalArgs),
    /// Compare an oracle with an envelope over a grid.
    Sweep(SweepArgs),
    /// Run the inequality suite and compare brackets with the baseline.
    Verify(VerifyArgs),
    /// Monte Carlo survival probability and kernel histogram.
    Mc(McArgs),
    /// Hitting-time density or survival function.
    Hitting(HittingArgs),
}

#[derive(Args, Debug, Default)]
struct QuadFlags {
    /// Relative tolerance of the oracles.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Contour nodes of the hitting-time inversion.
    #[arg(long)]
    contour_nodes: Option<usize>,
    #[arg(long)]
    max_subdivisions: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum Method {
    Free,
    Hunt,
    Image,
    Sandwich,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    t: f64,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    y: f64,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Barrier.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    quad: QuadFlags,
}

#[derive(Args, Debug)]
struct GridFlags {
    /// Grid as `t=lo:hi:n,x=lo:hi:n,y=lo:hi:n`; missing axes take the defaults.
    #[arg(long)]
    grid: Option<String>,
    /// Time axis `lo:hi:n` (overrides --grid).
    #[arg(long)]
    t: Option<Axis>,
    #[arg(long)]
    x: Option<Axis>,
    #[arg(long)]
    y: Option<Axis>,
}

impl GridFlags {
    fn grid(&self) -> Result<GridSpec> {
        let mut g = match &self.grid {
            Some(s) => GridSpec::parse(s)?,
            None => GridSpec::default(),
        };
        g.t = self.t.unwrap_or(g.t);
        g.x = self.x.unwrap_or(g.x);
        g.y = self.y.unwrap_or(g.y);
        g.validate()?;
        Ok(g)
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// all, small, large, prop31:<m> or prop32.
    #[arg(long)]
    regime: Option<RegimeFilter>,
    /// hunt, mc or mu-half.
    #[arg(long, default_value = "hunt")]
    oracle: Oracle,
    /// small, large, unified or mu.
    #[arg(long, default_value = "unified")]
    envelope: Envelope,
    #[command(flatten)]
    grid: GridFlags,
    /// CSV output file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    quad: QuadFlags,
    #[command(flatten)]
    mc: McFlags,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    grid: GridFlags,
    /// Baseline file of frozen brackets.
    #[arg(long)]
    baseline: Option<PathBuf>,
    /// Write the measured brackets into the baseline instead of comparing.
    #[arg(long)]
    update_baseline: bool,
    #[command(flatten)]
    quad: QuadFlags,
}

#[derive(Args, Debug, Default)]
struct McFlags {
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Histogram as `bins:r_max`.
    #[arg(long)]
    hist: Option<String>,
    /// Disable the Brownian-bridge crossing correction.
    #[arg(long)]
    no_bridge: bool,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=3))]
    dim: u32,
    #[arg(long)]
    x: f64,
    #[arg(long)]
    t: f64,
    #[command(flatten)]
    mc: McFlags,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("what").required(true).args(["density", "survival"]))]
#[command(group = clap::ArgGroup::new("kind").args(["profile", "oracle", "lower"]))]
struct HittingArgs {
    #[arg(long)]
    x: f64,
    /// Density `q_x(s)` at this time.
    #[arg(long)]
    density: Option<f64>,
    /// Survival probability `P_x(T_1 > t)` at this time.
    #[arg(long)]
    survival: Option<f64>,
    /// Constant-free comparison profile.
    #[arg(long)]
    profile: bool,
    /// Numerical value (the default).
    #[arg(long)]
    oracle: bool,
    /// Explicit lower bound (density only).
    #[arg(long)]
    lower: bool,
    #[command(flatten)]
    quad: QuadFlags,
}

#[derive(Serialize)]
struct Diagnostics {
    error_bounds: Value,
    n_skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_ms: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

#[derive(Serialize)]
struct OutputRecord {
    schema_version: &'static str,
    command: &'static str,
    inputs: Value,
    results: Value,
    diagnostics: Diagnostics,
}

/// A finished command: the record to print and the exit status.
struct Outcome {
    record: OutputRecord,
    code: i32,
}

fn record(command: &'static str, inputs: Value, results: Value, error_bounds: Value) -> OutputRecord {
    OutputRecord {
        schema_version: SCHEMA_VERSION,
        command,
        inputs,
        results,
        diagnostics: Diagnostics { error_bounds, n_skipped: 0, runtime_ms: None, notes: Vec::new() },
    }
}

fn ok(record: OutputRecord) -> Result<Outcome> {
    Ok(Outcome { record, code: 0 })
}

/// Defaults from `HK_CONFIG` (a JSON file with optional `quad`, `mc` and
/// `inject_fault` fields) and `HK_INJECT_FAULT`.
fn base_config() -> Result<VerifyCfg> {
    let mut cfg = match std::env::var_os("HK_CONFIG") {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| HkError::Io(format!("HK_CONFIG {}: {e}", Path::new(&path).display())))?;
            serde_json::from_str::<VerifyCfg>(&text).map_err(|e| HkError::Config(format!("HK_CONFIG: {e}")))?
        }
        None => VerifyCfg::default(),
    };
    if let Ok(v) = std::env::var("HK_INJECT_FAULT") {
        let f: f64 = v.trim().parse().map_err(|_| HkError::Config(format!("HK_INJECT_FAULT = {v:?}")))?;
        if !(f.is_finite() && f > 0.0) {
            return Err(HkError::Config(format!("HK_INJECT_FAULT must be a positive factor, got {v:?}")));
        }
        cfg.inject_fault = Some(f);
    }
    Ok(cfg)
}

fn apply_quad(cfg: &mut VerifyCfg, q: &QuadFlags) -> Result<()> {
    if let Some(v) = q.rel_tol {
        cfg.quad.rel_tol = v;
    }
    if let Some(v) = q.contour_nodes {
        cfg.quad.contour_nodes = v;
    }
    if let Some(v) = q.max_subdivisions {
        cfg.quad.max_subdivisions = v;
    }
    cfg.quad.validate()
}

fn apply_mc(cfg: &mut McConfig, f: &McFlags) -> Result<()> {
    if let Some(v) = f.paths {
        cfg.paths = v;
    }
    if let Some(v) = f.dt {
        cfg.dt = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if f.no_bridge {
        cfg.bridge_correction = false;
    }
    if let Some(h) = &f.hist {
        let bad = || HkError::Config(format!("--hist must look like bins:r_max, got {h:?}"));
        let (b, r) = h.split_once(':').ok_or_else(bad)?;
        cfg.bins = b.trim().parse().map_err(|_| bad())?;
        cfg.r_max = r.trim().parse().map_err(|_| bad())?;
    }
    cfg.validate()
}

fn cmd_eval(a: &EvalArgs) -> Result<Outcome> {
    let mut cfg = base_config()?;
    apply_quad(&mut cfg, &a.quad)?;
    let inputs = json!({"t": a.t, "x": a.x, "y": a.y, "mu": a.mu, "a": a.a, "method": a.method});
    match a.method {
        Method::Hunt if a.mu != 0.0 => return Err(HkError::Config("--method hunt needs --mu 0".into())),
        Method::Image if a.mu != 0.5 => return Err(HkError::Config("--method image needs --mu 0.5".into())),
        Method::Sandwich if a.mu != 0.0 => return Err(HkError::Config("--method sandwich needs --mu 0".into())),
        _ => {}
    }
    if a.method != Method::Free {
        PointQuery::new(a.t, a.x, a.y, a.mu, a.a)?;
        if a.method != Method::Hunt && a.a != 1.0 {
            return Err(HkError::Config(format!("--method {:?} is only available for --a 1", a.method)));
        }
    }
    let value_record = |ln: f64, err: f64| {
        let value = ln.exp();
        let results = json!({"value": value, "ln_value": ln, "error_bound": err});
        record("eval", inputs.clone(), results, json!({"value": err}))
    };
    match a.method {
        Method::Free => {
            let ln = ln_free_kernel(a.mu, a.t, a.x, a.y)?;
            ok(value_record(ln, ln.exp() * 16.0 * f64::EPSILON * (1.0 + ln.abs())))
        }
        Method::Image => {
            let v = killed_kernel_mu_half(a.t, a.x, a.y)?;
            let ln = ln_killed_kernel_mu_half(a.t, a.x, a.y)?;
            let mut r = value_record(ln, v * 16.0 * f64::EPSILON * (1.0 + ln.abs()));
            r.results["value"] = json!(v);
            ok(r)
        }
        Method::Hunt => match killed_kernel_scaled(a.a, a.t, a.x, a.y, &cfg.quad) {
            Ok(v) => {
                let mut r = value_record(v.ln_value, v.error_bound);
                r.results["value"] = json!(v.value);
                r.results["rel_error"] = json!(v.rel_error);
                ok(r)
            }
            Err(e @ HkError::Cancellation { upper }) => {
                let mut r = record("eval", inputs, json!({"interval": [0.0, upper]}), json!({"value": upper}));
                r.diagnostics.notes.push(e.to_string());
                Ok(Outcome { record: r, code: e.exit_code() })
            }
            Err(e) => Err(e),
        },
        Method::Sandwich => {
            let (lower, upper) = sandwich_bounds(a.t, a.x, a.y)?;
            let results = json!({"lower": lower, "upper": upper});
            ok(record("eval", inputs, results, json!(null)))
        }
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn cmd_sweep(a: &SweepArgs) -> Result<Outcome> {
    let mut cfg = base_config()?;
    apply_quad(&mut cfg, &a.quad)?;
    apply_mc(&mut cfg.mc, &a.mc)?;
    let mut grid = a.grid.grid()?;
    if let Some(r) = a.regime {
        grid.filter = r;
    }
    a.envelope.check_compatible(a.oracle, grid.filter)?;
    let file = File::create(&a.out).map_err(|e| HkError::Io(format!("{}: {e}", a.out.display())))?;
    let out = verify::ratio_sweep(&grid, a.oracle, a.envelope, &cfg)?;
    let mut w = BufWriter::new(file);
    let io = |e: std::io::Error| HkError::Io(format!("{}: {e}", a.out.display()));
    writeln!(w, "{CSV_HEADER}").map_err(io)?;
    for r in &out.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt17(r.point.t),
            fmt17(r.point.x),
            fmt17(r.point.y),
            fmt17(r.oracle),
            fmt17(r.envelope),
            fmt17(r.ratio),
            fmt17(r.err_bound),
            r.skipped
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;
    let inputs = json!({
        "grid": grid,
        "grid_canonical": grid.canonical(),
        "grid_hash": format!("{:016x}", grid.hash()),
        "oracle": a.oracle,
        "envelope": a.envelope,
        "out": a.out,
        "config": cfg,
    });
    let max_rel = out.rows.iter().filter(|r| !r.skipped).map(|r| r.err_bound / r.oracle).fold(0.0, f64::max);
    let n_violations = out.report.violations.len();
    let mut rec = record("sweep", inputs, serde_json::to_value(&out.report).unwrap_or(Value::Null), json!({"max_rel_error": max_rel}));
    rec.diagnostics.n_skipped = out.report.n_skipped;
    if a.oracle == Oracle::Mc {
        rec.diagnostics.notes.push(CURVATURE_NOTE.into());
    }
    let code = if n_violations > 0 { 4 } else { 0 };
    Ok(Outcome { record: rec, code })
}

fn default_baseline() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines").join("theorem_brackets.json")
}

fn cmd_verify(a: &VerifyArgs) -> Result<Outcome> {
    let mut cfg = base_config()?;
    apply_quad(&mut cfg, &a.quad)?;
    let grid = a.grid.grid()?.with_filter(RegimeFilter::All);
    let path = a.baseline.clone().unwrap_or_else(default_baseline);
    // fail early on a missing baseline
    let frozen = match baseline::load(&path) {
        Ok(entries) => entries,
        Err(HkError::BaselineMissing(_)) if a.update_baseline => Vec::new(),
        Err(e) => return Err(e),
    };
    let run = verify::run(&grid, &cfg)?;
    let mut problems: Vec<String> =
        run.checks.violations.iter().map(|v| format!("{:?}: {}", (v.point.t, v.point.x, v.point.y), v.description)).collect();
    if let (Some(min), Some(floor)) = (run.large_min_ratio, run.large_sandwich_floor) {
        if min < floor {
            problems.push(format!("large-regime min ratio {min:e} is below the sandwich floor {floor:e}"));
        }
    }
    for b in &run.brackets {
        if !b.finite() {
            problems.push(format!("{} / {}: bracket [{:e}, {:e}] is not finite", b.oracle, b.envelope, b.min_ratio, b.max_ratio));
        }
    }
    let mut drift = Vec::new();
    let mut updated = false;
    if a.update_baseline {
        if problems.is_empty() {
            let now = humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string();
            baseline::save(&path, &baseline::updated(&frozen, &run.brackets, &now))?;
            updated = true;
        }
    } else {
        drift = baseline::compare(&frozen, &run.brackets)?;
    }
    let passed = problems.is_empty() && drift.is_empty();
    let inputs = json!({
        "grid": grid,
        "grid_hash": format!("{:016x}", grid.hash()),
        "baseline": path,
        "update_baseline": a.update_baseline,
        "config": cfg,
    });
    let results = json!({
        "passed": passed,
        "n_violations": run.checks.violations.len(),
        "violations": problems,
        "drift": drift,
        "baseline_updated": updated,
        "n_points": run.checks.n_points,
        "killed_over_free": {"min": run.checks.min_ratio, "max": run.checks.max_ratio},
        "large_min_ratio": run.large_min_ratio,
        "large_sandwich_floor": run.large_sandwich_floor,
        "brackets": run.brackets,
    });
    let mut rec = record("verify", inputs, results, json!(null));
    rec.diagnostics.n_skipped = run.checks.n_skipped;
    rec.diagnostics.notes.push(
        "brackets are empirical over the swept grid; the constants of the estimates are not certified beyond it".into(),
    );
    Ok(Outcome { record: rec, code: if passed { 0 } else { 4 } })
}

fn cmd_mc(a: &McArgs) -> Result<Outcome> {
    let mut cfg = base_config()?.mc;
    apply_mc(&mut cfg, &a.mc)?;
    let dim = a.dim as usize;
    let inputs = json!({"dim": dim, "x": a.x, "t": a.t, "config": cfg});
    let mut rec = if a.mc.hist.is_some() {
        let h = mc::estimate_kernel_histogram(dim, a.x, a.t, &cfg)?;
        let results = json!({"survival": h.survival, "mass_above": h.mass_above, "bins": h.bins});
        record("mc", inputs, results, json!({"survival": h.survival.stderr}))
    } else {
        let r = mc::simulate_survival(dim, a.x, a.t, &cfg)?;
        record("mc", inputs, json!({"survival": r}), json!({"survival": r.stderr}))
    };
    rec.diagnostics.notes.push(CURVATURE_NOTE.into());
    ok(rec)
}

fn cmd_hitting(a: &HittingArgs) -> Result<Outcome> {
    let mut cfg = base_config()?;
    apply_quad(&mut cfg, &a.quad)?;
    let kind = if a.profile {
        "profile"
    } else if a.lower {
        "lower"
    } else {
        "oracle"
    };
    let inputs = json!({"x": a.x, "density": a.density, "survival": a.survival, "kind": kind, "config": cfg.quad});
    let (value, ln_value, err) = match (a.density, a.survival, kind) {
        (Some(s), _, "oracle") => {
            let v = hitting::ln_q_oracle(a.x, s, &cfg.quad)?;
            (v.ln_value.exp(), v.ln_value, v.ln_value.exp() * v.rel_err)
        }
        (Some(s), _, "profile") => {
            let v = hitting::q_estimate_profile(a.x, s)?;
            (v, v.ln(), 0.0)
        }
        (Some(s), _, _) => {
            let ln = hitting::ln_q_lower_bound(a.x, s)?;
            (ln.exp(), ln, 0.0)
        }
        (None, Some(t), "oracle") => {
            let (v, e) = hitting::survival_with_err(a.x, t, &cfg.quad)?;
            (v, v.ln(), e)
        }
        (None, Some(t), "profile") => {
            let v = hitting::survival_estimate_profile(a.x, t)?;
            (v, v.ln(), 0.0)
        }
        (None, Some(_), _) => return Err(HkError::Config("--lower is only available with --density".into())),
        (None, None, _) => return Err(HkError::Config("one of --density or --survival is required".into())),
    };
    let mut rec = record("hitting", inputs, json!({"value": value, "ln_value": ln_value, "error_bound": err}), json!({"value": err}));
    if value < cfg.quad.abs_floor {
        rec.diagnostics.notes.push("value is below abs_floor; use ln_value".into());
    }
    ok(rec)
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("HK_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| HkError::Config(format!("HK_THREADS = {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HkError::Config(format!("thread pool: {e}")))
}

/// Runs the command line; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let start = Instant::now();
    let result = init_threads().and_then(|_| match &cli.cmd {
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Mc(a) => cmd_mc(a),
        Cmd::Hitting(a) => cmd_hitting(a),
    });
    match result {
        Ok(mut out) => {
            if cli.timing {
                out.record.diagnostics.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            // a closed pipe is not an error of the command
            let _ = writeln!(std::io::stdout().lock(), "{}", crate::json::to_string_pretty(&out.record));
            out.code
        }
        Err(e) => {
            eprintln!("hk: {e}");
            e.exit_code()
        }
    }
}

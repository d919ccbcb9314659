//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use hk_core::mc::{estimate_kernel_histogram, McConfig};
use hk_core::quad::{integrate, tanh_sinh, GkOptions};
use hk_core::specfun::{
    bessel_i0, bessel_i0_scaled, bessel_i1, bessel_i1_scaled, bessel_k0, bessel_k0_scaled, upper_incomplete_gamma,
};
use hk_core::verify::{self, baseline, Envelope, GridSpec, Oracle, VerifyCfg, VerifyRun};
use hk_core::{killed_kernel_mu_half, HuntEvaluator, QuadCfg};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn report(id: u32, name: &str, o: &Outcome) -> bool {
    println!("criterion {id} {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

fn workers() -> usize {
    std::env::var("HK_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn inequality_suite(run: &VerifyRun, seconds: f64) -> Outcome {
    let budget = if workers() >= 8 { 120.0 } else { 600.0 };
    let n = run.checks.violations.len();
    let mut detail = format!(
        "{} points, {n} violations, {seconds:.1} s on {} worker(s) (budget {budget} s)",
        run.checks.n_points,
        workers()
    );
    for v in run.checks.violations.iter().take(5) {
        detail.push_str(&format!("\n    {:?}: {}", (v.point.t, v.point.x, v.point.y), v.description));
    }
    outcome(n == 0 && seconds <= budget, detail)
}

/// Bin average of the killed kernel against `y^{dim-1} dy`.
fn bin_average(f: &dyn Fn(f64) -> f64, dim: usize, lo: f64, hi: f64) -> f64 {
    let power = dim as f64;
    let measure = (hi.powf(power) - lo.powf(power)) / power;
    let mut pts: Vec<f64> = (0..=8).map(|k| lo + (hi - lo) * k as f64 / 8.0).collect();
    if lo == 1.0 {
        pts.extend((1..12).map(|k| 1.0 + (hi - lo) / 8.0 * 0.5f64.powi(k)));
        pts.sort_by(f64::total_cmp);
    }
    let opts = GkOptions { rel_tol: 1e-8, abs_tol: 0.0, max_subdivisions: 5000, noise: 1e-8 };
    let v = integrate(|y| if y <= 1.0 { 0.0 } else { f(y) * y.powf(power - 1.0) }, &pts, &opts).unwrap().value;
    v / measure
}

/// Histogram bins of `dim`-dimensional Brownian motion (1e6 paths,
/// `dt = t/200`) against bin averages of the analytic kernel, on two
/// `(t, x)` lines with 10 bins each.
fn mc_agreement(dim: usize) -> Outcome {
    let cfg = QuadCfg::default();
    let mut worst = 0.0f64;
    let mut points = 0;
    let mut lines = Vec::new();
    // the first line lies in the large-time regime xy >= t, the second
    // crosses from xy <= t (y < 6.7) into it
    for (t, x, r_max) in [(1.0f64, 2.0f64, 5.0f64), (10.0, 1.5, 11.0)] {
        let mc = McConfig { paths: 1_000_000, dt: t / 200.0, seed: 20_240_601, bins: 10, r_max, bridge_correction: true };
        let h = estimate_kernel_histogram(dim, x, t, &mc).unwrap();
        let ev = HuntEvaluator::with_tables(&cfg, &[x], t).unwrap();
        let kernel = |y: f64| -> f64 {
            if dim == 2 {
                ev.eval(t, x, y).unwrap().value
            } else {
                killed_kernel_mu_half(t, x, y).unwrap()
            }
        };
        for b in &h.bins {
            let exact = bin_average(&kernel, dim, b.y_lo, b.y_hi);
            let z = (b.p_hat - exact).abs() / b.stderr;
            worst = worst.max(z);
            points += 1;
        }
        lines.push(format!("(t={t}, x={x})"));
    }
    outcome(worst < 3.0, format!("{points} bins on {}, worst |mc - exact| = {worst:.2} stderr", lines.join(" and ")))
}

fn gamma_identity() -> (f64, f64) {
    // mpmath, 30 digits
    let reference = [(0.1f64, 3.40176933669161526f64), (1.0, 0.178147711781560690), (10.0, 1.26090426132415707e-6)];
    let mut identity = 0.0f64;
    let mut library = 0.0f64;
    for (z, mp) in reference {
        // u = z e^w, so both tails are smooth in w
        let w_hi = ((z + 60.0) / z).ln();
        let pts: Vec<f64> = (0..=40).map(|k| w_hi * k as f64 / 40.0).collect();
        let opts = GkOptions { rel_tol: 1e-14, abs_tol: 0.0, max_subdivisions: 5000, noise: 0.0 };
        let lhs = integrate(|w| (z * w.exp()).powf(-0.5) * (-z * w.exp()).exp(), &pts, &opts).unwrap().value;
        let half = tanh_sinh(|w| (z * w.exp()).powf(0.5) * (-z * w.exp()).exp(), 0.0, w_hi, 1e-14).unwrap();
        let rhs = 2.0 * (-z).exp() / z.sqrt() - 2.0 * half;
        identity = identity.max((lhs / rhs - 1.0).abs()).max((lhs / mp - 1.0).abs());
        library = library.max((upper_incomplete_gamma(-0.5, z).unwrap() / lhs - 1.0).abs());
    }
    (identity, library)
}

fn special_functions() -> Outcome {
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    // reference values from mpmath
    let i0 = rel(bessel_i0(1.0).unwrap(), 1.2660658777520082);
    let i1 = rel(bessel_i1(1.0).unwrap(), 0.565159103992485);
    let k0 = rel(bessel_k0(1.0).unwrap(), 0.42102443824070834);
    let (identity, library) = gamma_identity();
    let mut scaled = 0.0f64;
    for k in 1..=6000 {
        let z = 0.1 * k as f64;
        let e = (-z).exp();
        scaled = scaled.max(rel(bessel_i0(z).unwrap() * e, bessel_i0_scaled(z).unwrap()));
        scaled = scaled.max(rel(bessel_i1(z).unwrap() * e, bessel_i1_scaled(z).unwrap()));
        scaled = scaled.max(rel(bessel_k0(z).unwrap() / e, bessel_k0_scaled(z).unwrap()));
    }
    let pass = i0 <= 1e-13 && i1 <= 1e-13 && k0 <= 1e-10 && identity <= 1e-10 && library <= 1e-10 && scaled <= 1e-12;
    outcome(
        pass,
        format!(
            "I0(1) {i0:.1e}, I1(1) {i1:.1e}, K0(1) {k0:.1e}, Gamma(-1/2,z) identity {identity:.1e} and library {library:.1e}, scaled vs unscaled {scaled:.1e}"
        ),
    )
}

fn theorem_brackets(run: &VerifyRun) -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines").join("theorem_brackets.json");
    let mut problems = Vec::new();
    let mut main = Vec::new();
    for env in [Envelope::Small, Envelope::Large] {
        let env = env.name();
        match run.brackets.iter().find(|b| b.oracle == Oracle::Hunt.name() && b.envelope == env) {
            Some(b) if b.finite() => main.push(format!("{env} [{:.4}, {:.4}]", b.min_ratio, b.max_ratio)),
            Some(b) => problems.push(format!("{env} bracket [{:e}, {:e}] not finite", b.min_ratio, b.max_ratio)),
            None => problems.push(format!("no {env} bracket")),
        }
    }
    match baseline::load(&path).and_then(|frozen| baseline::compare(&frozen, &run.brackets)) {
        Ok(drift) => problems.extend(drift),
        Err(e) => problems.push(format!("baseline: {e}")),
    }
    match (run.large_min_ratio, run.large_sandwich_floor) {
        (Some(min), Some(floor)) if min >= floor => main.push(format!("large min {min:.6} >= sandwich floor {floor:.6}")),
        (min, floor) => problems.push(format!("large min {min:?} vs sandwich floor {floor:?}")),
    }
    let mut detail = main.join(", ");
    for p in &problems {
        detail.push_str(&format!("\n    {p}"));
    }
    outcome(problems.is_empty(), detail)
}

fn hk(args: &[&str], threads: &str) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_hk"))
        .args(args)
        .env_remove("HK_CONFIG")
        .env_remove("HK_INJECT_FAULT")
        .env("HK_THREADS", threads)
        .output()
        .expect("spawn hk");
    assert!(out.status.success(), "hk {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out.stdout
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let csv_arg = csv.to_str().unwrap();
    let grid = "t=1e-3:100:5,x=1.001:1000:5,y=1.001:1000:5";
    let commands: [Vec<&str>; 3] = [
        vec!["mc", "--dim", "3", "--x", "2", "--t", "1", "--paths", "100000", "--dt", "0.005", "--seed", "7", "--hist", "20:6"],
        vec!["sweep", "--grid", grid, "--out", csv_arg],
        vec!["sweep", "--oracle", "mc", "--grid", "t=0.5:2:2,x=1.2:3:2,y=1.2:3:3", "--paths", "20000", "--out", csv_arg],
    ];
    let mut bad = Vec::new();
    for args in &commands {
        let mut seen = Vec::new();
        for threads in ["1", "8", "1", "8"] {
            let stdout = hk(args, threads);
            let file = std::fs::read(&csv).unwrap_or_default();
            seen.push((stdout, file));
        }
        if seen.iter().any(|s| *s != seen[0]) {
            bad.push(args[..2].join(" "));
        }
    }
    let detail = if bad.is_empty() {
        "mc, sweep (hunt) and sweep (mc) bit-identical over two runs each at HK_THREADS 1 and 8".into()
    } else {
        format!("outputs differ: {}", bad.join("; "))
    };
    outcome(bad.is_empty(), detail)
}

fn main() {
    let mut ok = true;

    let start = Instant::now();
    let run = verify::run(&GridSpec::default(), &VerifyCfg::default());
    let seconds = start.elapsed().as_secs_f64();
    let run = match run {
        Ok(r) => Some(r),
        Err(e) => {
            ok &= report(1, "exact inequalities on the default grid", &outcome(false, format!("verify run failed: {e}")));
            None
        }
    };
    if let Some(run) = &run {
        ok &= report(1, "exact inequalities on the default grid", &inequality_suite(run, seconds));
    }

    let start = Instant::now();
    let mass = common::hitting_mass();
    let laplace = common::laplace_round_trip();
    let mc2 = mc_agreement(2);
    let mc3 = mc_agreement(3);
    let pass = mass <= 1e-6 && laplace <= 1e-6 && mc2.pass && mc3.pass;
    let seconds = start.elapsed().as_secs_f64();
    let detail = format!(
        "(a) mass {mass:.1e}, (b) Laplace {laplace:.1e}, (c) dim 2: {}, (d) dim 3: {}, {seconds:.1} s (budget 900 s)",
        mc2.detail, mc3.detail
    );
    ok &= report(2, "oracle cross-validation", &outcome(pass && seconds <= 900.0, detail));

    let norm = common::free_normalization();
    let free_ck = common::free_chapman_kolmogorov();
    let integral = common::killed_integral_vs_survival();
    let killed_ck = common::killed_chapman_kolmogorov();
    let pass = integral <= 1e-5 && free_ck <= 1e-7 && killed_ck <= 1e-4 && norm <= 1e-8;
    let detail = format!(
        "kernel integral vs survival {integral:.1e}, free CK {free_ck:.1e}, killed CK {killed_ck:.1e}, normalization {norm:.1e}"
    );
    ok &= report(3, "consistency identities", &outcome(pass, detail));

    match &run {
        Some(run) => ok &= report(4, "two-sided estimate brackets", &theorem_brackets(run)),
        None => ok &= report(4, "two-sided estimate brackets", &outcome(false, "no verify run".into())),
    }

    ok &= report(5, "special functions", &special_functions());
    ok &= report(6, "determinism", &determinism());

    if !ok {
        std::process::exit(1);
    }
}

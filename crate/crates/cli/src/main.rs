//! `afem`: run adaptive loops, verify them, fit rates and sweep parameters.

use afem::adapt::{fit_power_law, run_adaptive_with, AdaptiveConfig, RateFit, RunSummary};
use afem::telemetry::{read_levels, write_run, LEVELS_FILE};
use afem::verify::{mesh_axiom_entry, mesh_axiom_suite, verify_run, VerifyOptions};
use afem::ProblemSpec;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Parser)]
#[command(name = "afem", version, about = "Adaptive P1 finite element runs with convergence diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the adaptive loop and write levels.csv, timing.csv and summary.json.
    Run(Common),
    /// Run with full history and check the convergence axioms.
    Verify(Common),
    /// Fit convergence rates from a finished run or a fresh one.
    Rates {
        #[command(flatten)]
        common: Common,
        /// Directory or levels.csv of an earlier run; skips running.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// One run per (theta, vartheta) combination plus an aggregate summary.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated bulk parameters; defaults to the config value.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        theta: Option<Vec<f64>>,
        /// Comma-separated inexact-solve parameters; selects inexact solves.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        vartheta: Option<Vec<f64>>,
        /// Maximum number of concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML, or JSON with a .json extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "afem-out")]
    out: PathBuf,
    /// Seed for the randomized verification checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    stop_eta: Option<f64>,
    #[arg(long)]
    stop_elements: Option<usize>,
    /// Write a VTK snapshot every this many levels.
    #[arg(long)]
    vtk_every: Option<usize>,
}

/// What a command was asked to do; written next to its outputs.
#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    config: Option<&'a Path>,
    out: &'a Path,
    seed: u64,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.to_string())
    }
}

struct Loaded {
    config: AdaptiveConfig,
    verify: VerifyOptions,
}

fn parse_config(path: &Path) -> Result<Loaded, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    let usage = |e: String| Failure::Usage(format!("{}: {e}", path.display()));
    let mut value: serde_json::Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| usage(e.to_string()))?
    } else {
        let t: toml::Value = toml::from_str(&text).map_err(|e| usage(e.to_string()))?;
        serde_json::to_value(t).map_err(|e| usage(e.to_string()))?
    };
    let verify = match value.as_object_mut().and_then(|m| m.remove("verify")) {
        Some(v) => serde_json::from_value(v).map_err(|e| usage(format!("[verify]: {e}")))?,
        None => VerifyOptions::default(),
    };
    let config: AdaptiveConfig = serde_json::from_value(value).map_err(|e| usage(e.to_string()))?;
    Ok(Loaded { config, verify })
}

fn load(common: &Common) -> Result<Loaded, Failure> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("--config is required".into()))?;
    let mut loaded = parse_config(path)?;
    let c = &mut loaded.config;
    if let Some(eta) = common.stop_eta {
        c.stop.eta = Some(eta);
    }
    if let Some(n) = common.stop_elements {
        c.stop.max_elements = Some(n);
    }
    if let Some(m) = common.vtk_every {
        c.snapshot_every = Some(m);
    }
    loaded.verify.seed = common.seed;
    c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(loaded)
}

fn problem(config: &AdaptiveConfig) -> Result<ProblemSpec, Failure> {
    ProblemSpec::by_name(&config.problem).ok_or_else(|| {
        Failure::Usage(format!(
            "unknown problem `{}` (known: {})",
            config.problem,
            afem::problem::PROBLEM_NAMES.join(", ")
        ))
    })
}

fn write_manifest(common: &Common, subcommand: &str) -> Result<(), Failure> {
    fs::create_dir_all(&common.out)?;
    let m = RunManifest {
        subcommand,
        config: common.config.as_deref(),
        out: &common.out,
        seed: common.seed,
    };
    fs::write(common.out.join("manifest.json"), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

fn execute(config: &AdaptiveConfig, out: &Path) -> Result<RunSummary, Failure> {
    let p = problem(config)?;
    let run = run_adaptive_with(config, &p, (p.initial_mesh)())?;
    Ok(write_run(out, &run)?)
}

fn print_rate(label: &str, fit: Option<&RateFit>) {
    match fit {
        Some(f) => println!("{label:<10} slope {:.4}  95% CI [{:.4}, {:.4}]  ({} points)", f.slope, f.ci_low, f.ci_high, f.points),
        None => println!("{label:<10} not available"),
    }
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let loaded = load(common)?;
    write_manifest(common, "run")?;
    let s = execute(&loaded.config, &common.out)?;
    println!(
        "{}: {} levels, {} elements, eta {:.4e} ({:?})",
        s.problem, s.levels, s.final_elements, s.final_eta, s.stop_reason
    );
    print_rate("estimator", s.estimator_rate.as_ref());
    print_rate("error", s.error_rate.as_ref());
    Ok(())
}

fn cmd_verify(common: &Common) -> Result<bool, Failure> {
    let mut loaded = load(common)?;
    write_manifest(common, "verify")?;
    loaded.config.record_history = true;
    let p = problem(&loaded.config)?;
    let run = run_adaptive_with(&loaded.config, &p, (p.initial_mesh)())?;
    write_run(&common.out, &run)?;
    let mut report = verify_run(&run, &p, &loaded.verify)?;
    let stats = mesh_axiom_suite(common.seed, 100, 10, loaded.config.k)?;
    report.entries.push(mesh_axiom_entry(&stats));
    fs::write(common.out.join("verification.json"), report.to_json() + "\n")?;
    print!("{}", report.table());
    Ok(report.passed())
}

fn cmd_rates(common: &Common, input: Option<&Path>) -> Result<(), Failure> {
    let levels = match input {
        Some(path) => {
            let file = if path.is_dir() { path.join(LEVELS_FILE) } else { path.to_path_buf() };
            let f = fs::File::open(&file).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", file.display())))?;
            read_levels(f)?
        }
        None => {
            let loaded = load(common)?;
            write_manifest(common, "rates")?;
            let p = problem(&loaded.config)?;
            let run = run_adaptive_with(&loaded.config, &p, (p.initial_mesh)())?;
            write_run(&common.out, &run)?;
            run.levels
        }
    };
    let n0 = levels.first().ok_or_else(|| Failure::Runtime("no levels recorded".into()))?.elements;
    let points = |q: &dyn Fn(&afem::adapt::LevelRecord) -> Option<f64>| -> Option<Vec<(f64, f64)>> {
        levels.iter().map(|l| q(l).map(|v| ((l.elements - n0 + 1) as f64, v))).collect()
    };
    let est = fit_power_law(&points(&|l| Some(l.eta)).unwrap_or_default())?;
    let err = points(&|l| l.error).and_then(|p| fit_power_law(&p).ok());
    print_rate("estimator", Some(&est));
    print_rate("error", err.as_ref());
    if input.is_none() {
        #[derive(Serialize)]
        struct Rates {
            estimator: RateFit,
            error: Option<RateFit>,
        }
        let json = serde_json::to_string_pretty(&Rates { estimator: est, error: err })?;
        fs::write(common.out.join("rates.json"), json + "\n")?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SweepEntry {
    theta: f64,
    vartheta: Option<f64>,
    dir: String,
    summary: Option<RunSummary>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepReport {
    runs: Vec<SweepEntry>,
    min_slope: Option<f64>,
    max_slope: Option<f64>,
    slope_spread: Option<f64>,
}

fn cmd_sweep(common: &Common, thetas: Option<&[f64]>, varthetas: Option<&[f64]>, jobs: usize) -> Result<(), Failure> {
    let loaded = load(common)?;
    let thetas = thetas.map_or_else(|| vec![loaded.config.theta], <[f64]>::to_vec);
    if thetas.is_empty() || varthetas.is_some_and(|v| v.is_empty()) {
        return Err(Failure::Usage("parameter lists must not be empty".into()));
    }
    if jobs == 0 {
        return Err(Failure::Usage("--jobs must be positive".into()));
    }
    let mut combos = Vec::new();
    for &theta in &thetas {
        match varthetas {
            Some(vs) => combos.extend(vs.iter().map(|&v| (theta, Some(v)))),
            None => combos.push((theta, None)),
        }
    }
    let mut configs = Vec::new();
    for &(theta, vartheta) in &combos {
        let mut c = loaded.config.clone();
        c.theta = theta;
        if let Some(v) = vartheta {
            c.solver.mode = afem::solve::SolverMode::Inexact;
            c.solver.vartheta = v;
        }
        c.validate().map_err(|e| Failure::Usage(e.to_string()))?;
        let dir = match vartheta {
            Some(v) => format!("theta_{theta}_vartheta_{v}"),
            None => format!("theta_{theta}"),
        };
        configs.push((c, dir));
    }
    write_manifest(common, "sweep")?;

    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let results: Mutex<Vec<Option<SweepEntry>>> = Mutex::new((0..configs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(configs.len()) {
            s.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((config, dir)) = configs.get(i) else { break };
                let outcome = execute(config, &common.out.join(dir));
                let (summary, error) = match outcome {
                    Ok(s) => (Some(s), None),
                    Err(Failure::Usage(e) | Failure::Runtime(e)) => {
                        failed.store(true, Ordering::SeqCst);
                        (None, Some(e))
                    }
                };
                results.lock().unwrap()[i] = Some(SweepEntry {
                    theta: config.theta,
                    vartheta: combos[i].1,
                    dir: dir.clone(),
                    summary,
                    error,
                });
            });
        }
    });
    let runs: Vec<SweepEntry> = results.into_inner().unwrap().into_iter().flatten().collect();
    let slopes: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.summary.as_ref()?.estimator_rate.map(|f| f.slope))
        .collect();
    let min = slopes.iter().copied().reduce(f64::min);
    let max = slopes.iter().copied().reduce(f64::max);
    for r in &runs {
        match (&r.summary, &r.error) {
            (Some(s), _) => println!(
                "{:<28} {} levels, slope {}",
                r.dir,
                s.levels,
                s.estimator_rate.map_or("n/a".into(), |f| format!("{:.4}", f.slope))
            ),
            (None, Some(e)) => println!("{:<28} failed: {e}", r.dir),
            _ => {}
        }
    }
    let report = SweepReport {
        runs,
        min_slope: min,
        max_slope: max,
        slope_spread: min.zip(max).map(|(a, b)| b - a),
    };
    fs::write(common.out.join("sweep.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    if let Some(spread) = report.slope_spread {
        println!("slope spread {spread:.4}");
    }
    if failed.load(Ordering::SeqCst) {
        return Err(Failure::Runtime("a sweep run failed; partial outputs kept".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c).map(|_| true),
        Command::Verify(c) => cmd_verify(c),
        Command::Rates { common, input } => cmd_rates(common, input.as_deref()).map(|_| true),
        Command::Sweep {
            common,
            theta,
            vartheta,
            jobs,
        } => cmd_sweep(common, theta.as_deref(), vartheta.as_deref(), *jobs).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one verification check failed");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

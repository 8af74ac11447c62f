//! Command-line front end: simulate, identify, realize, run the two
//! adaptive-control algorithms, orchestrate experiment grids, and check
//! reports. Exit codes: 0 success, 1 config error, 2 runtime abort,
//! 3 failed report checks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use arxlab::arx::{simulate_from, GaussianController};
use arxlab::error::Error;
use arxlab::harness::{
    apply_checks, run_experiment, Algorithm, ExperimentConfig, ExperimentSummary,
};
use arxlab::hokalman::{
    build_hankel, default_split, order_gap_estimate, parameter_confidence, realize,
};
use arxlab::io;
use arxlab::sysid::{attach_confidence, pe_diagnostic, rls_from_log, ConfidenceParams};

#[derive(Parser)]
#[command(
    name = "arxlab",
    about = "ARX system identification and adaptive control lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a system under Gaussian excitation and write a trajectory CSV.
    Sim(SimArgs),
    /// Estimate Markov parameters from a trajectory CSV.
    Sysid(SysidArgs),
    /// Realize a state-space model from a serialized estimate.
    Realize(RealizeArgs),
    /// Run the gradient-descent controller experiment grid.
    Dfc(ExperimentArgs),
    /// Run the optimistic controller experiment grid.
    Ofu(ExperimentArgs),
    /// Run an experiment grid as configured (any algorithm).
    Experiment(ExperimentArgs),
    /// Summarize an experiment directory; `--check` enforces thresholds.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimArgs {
    /// JSON config: {"system": {...}, "steps": N, "seed": N, "sigma_u": x}
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize)]
struct SimConfig {
    system: io::SystemSpec,
    steps: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "one")]
    sigma_u: f64,
    /// Initial state for bias experiments; zero when omitted.
    #[serde(default)]
    x0: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

#[derive(Args)]
struct SysidArgs {
    /// JSON config: {"horizon": h, "lambda": x, "confidence": {...}, "t_total": N}
    #[arg(long)]
    config: PathBuf,
    /// Trajectory CSV produced by `sim` (or compatible).
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Deserialize)]
struct SysidConfig {
    horizon: usize,
    #[serde(default = "one")]
    lambda: f64,
    #[serde(default)]
    confidence: Option<arxlab::harness::ConfidenceSpec>,
    #[serde(default)]
    t_total: Option<usize>,
}

#[derive(Args)]
struct RealizeArgs {
    /// Serialized estimate JSON (from `sysid`).
    #[arg(long)]
    estimate: PathBuf,
    /// Assumed state order n.
    #[arg(long)]
    order: usize,
    /// Hankel block-row count; balanced split when omitted (d1 + d2 + 1 = h).
    #[arg(long)]
    d1: Option<usize>,
    /// Hankel block-column count minus one.
    #[arg(long)]
    d2: Option<usize>,
    /// Markov-error bound used for the radii report; derived from the
    /// estimate's confidence data when omitted.
    #[arg(long)]
    g_error: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Override the config's seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads (defaults to the rayon default).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment output directory containing summary.json.
    #[arg(long)]
    dir: PathBuf,
    /// Evaluate the summary's embedded checks; exit 3 if any fails.
    #[arg(long)]
    check: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version requests are successes; anything else is a
            // config error.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err {
                Error::Diverged { .. } | Error::Numerical(_) | Error::BadControl { .. } => 2,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: Cli) -> arxlab::Result<ExitCode> {
    match cli.command {
        Command::Sim(args) => cmd_sim(args),
        Command::Sysid(args) => cmd_sysid(args),
        Command::Realize(args) => cmd_realize(args),
        Command::Dfc(args) => cmd_experiment(args, Some(Algorithm::Dfc)),
        Command::Ofu(args) => cmd_experiment(args, Some(Algorithm::Ofu)),
        Command::Experiment(args) => cmd_experiment(args, None),
        Command::Report(args) => cmd_report(args),
    }
}

fn cmd_sim(args: SimArgs) -> arxlab::Result<ExitCode> {
    let cfg: SimConfig = io::read_json(&args.config)?;
    let system = cfg.system.to_system()?;
    if cfg.steps == 0 {
        return Err(Error::Config("steps must be >= 1".into()));
    }
    let mut ctrl = GaussianController::new(system.input_dim(), cfg.sigma_u, cfg.seed);
    let x0 = match cfg.x0 {
        Some(v) => nalgebra::DVector::from_vec(v),
        None => nalgebra::DVector::zeros(system.state_dim()),
    };
    let log = simulate_from(&system, x0, &mut ctrl, cfg.steps, cfg.seed, |_, _| 0.0)?;
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("trajectory.csv");
    io::write_trajectory_csv(&path, &log)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_sysid(args: SysidArgs) -> arxlab::Result<ExitCode> {
    let cfg: SysidConfig = io::read_json(&args.config)?;
    let log = io::read_trajectory_csv(&args.trajectory)?;
    let mut est = rls_from_log(&log, cfg.horizon, cfg.lambda)?;
    let conf = cfg.confidence.unwrap_or_default();
    let params = ConfidenceParams {
        s: conf.s,
        delta: conf.delta,
        r: conf.r,
        t_total: cfg.t_total.unwrap_or(log.len()),
    };
    let beta = attach_confidence(&mut est, &params)?;
    let (sigma_min, sigma_min_rate) = pe_diagnostic(&est);
    std::fs::create_dir_all(&args.out)?;
    let est_path = args.out.join("estimate.json");
    io::write_json(&est_path, &io::EstimateSpec::from_estimate(&est))?;
    let diag_path = args.out.join("diagnostics.json");
    io::write_json(
        &diag_path,
        &serde_json::json!({
            "samples": est.t,
            "beta": beta,
            "sigma_min": sigma_min,
            "sigma_min_rate": sigma_min_rate,
        }),
    )?;
    println!("wrote {} and {}", est_path.display(), diag_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_realize(args: RealizeArgs) -> arxlab::Result<ExitCode> {
    let spec: io::EstimateSpec = io::read_json(&args.estimate)?;
    let est = spec.to_estimate()?;
    let markov = est.markov()?;
    let (d1, d2) = match (args.d1, args.d2) {
        (Some(d1), Some(d2)) => (d1, d2),
        (None, None) => default_split(est.h),
        _ => return Err(Error::Config("give both --d1 and --d2 or neither".into())),
    };
    let pair = build_hankel(&markov, d1, d2)?;
    let realized = realize(&pair, args.order)?;
    let g_error = args.g_error.or_else(|| {
        est.beta.map(|beta| {
            let (sigma_min, _) = pe_diagnostic(&est);
            (beta / sigma_min.max(1e-300)).sqrt()
        })
    });
    let radii = match g_error {
        Some(g) => Some(parameter_confidence(&realized, g, &pair)?),
        None => None,
    };
    std::fs::create_dir_all(&args.out)?;
    let path = args.out.join("realized.json");
    let mut spec = io::RealizedSpec::from_realized(&realized, radii);
    spec.order_hint = Some(order_gap_estimate(&pair).0);
    io::write_json(&path, &spec)?;
    if !realized.is_stable() {
        eprintln!("note: realized dynamics matrix is unstable (reported, not projected)");
    }
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(args: ExperimentArgs, force: Option<Algorithm>) -> arxlab::Result<ExitCode> {
    let mut cfg: ExperimentConfig = io::read_json(&args.config)?;
    if let Some(alg) = force {
        cfg.algorithm = alg;
    }
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    // The two controller front ends always emit their trajectories.
    if force.is_some() {
        cfg.emit_trajectories = true;
    }
    cfg.validate()?;
    let summary = if let Some(threads) = args.threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| run_experiment(&cfg, &args.out))?
    } else {
        run_experiment(&cfg, &args.out)?
    };
    print_summary(&summary);
    if summary.any_t_all_failed {
        eprintln!("error: every seed of some horizon aborted");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn print_summary(summary: &ExperimentSummary) {
    println!(
        "experiment {} [{} / {}]",
        summary.name, summary.algorithm, summary.mode
    );
    for row in &summary.per_t {
        match (row.median_final_regret, row.median_sysid_error) {
            (Some(r), _) => println!(
                "  T = {:>8}: {} cells ok, median final regret {:.6e} (iqr {:.3e})",
                row.t,
                row.cells_ok,
                r,
                row.iqr_final_regret.unwrap_or(f64::NAN)
            ),
            (None, Some(e)) => println!(
                "  T = {:>8}: {} cells ok, median estimation error {:.6e}",
                row.t, row.cells_ok, e
            ),
            _ => println!("  T = {:>8}: {} cells ok", row.t, row.cells_ok),
        }
    }
    if let Some(fit) = &summary.exponent_fit {
        println!(
            "  regret exponent: slope {:.4}, r^2 {:.4} ({} dropped)",
            fit.slope, fit.r_squared, fit.dropped
        );
    }
    if let Some(fit) = &summary.polylog_fit {
        println!("  polylog fit: k = {}, r^2 {:.4}", fit.k, fit.r_squared);
    }
    if let Some(fit) = &summary.sysid_slope {
        println!(
            "  sysid error slope: {:.4} (r^2 {:.4})",
            fit.slope, fit.r_squared
        );
    }
    if let Some(rate) = summary.membership_rate {
        println!("  confidence membership rate: {rate:.3}");
    }
}

fn cmd_report(args: ReportArgs) -> arxlab::Result<ExitCode> {
    let summary: ExperimentSummary = io::read_json(&args.dir.join("summary.json"))?;
    print_summary(&summary);
    let aborted: Vec<&arxlab::harness::CellResult> =
        summary.cells.iter().filter(|c| c.status != "ok").collect();
    if !aborted.is_empty() {
        println!("  {} aborted cells:", aborted.len());
        for cell in aborted {
            println!("    T = {}, seed = {}: {}", cell.t, cell.seed, cell.status);
        }
    }
    if args.check {
        let outcomes = apply_checks(&summary);
        if outcomes.is_empty() {
            println!("no checks configured");
            return Ok(ExitCode::SUCCESS);
        }
        let mut all_ok = true;
        for (name, pass, detail) in &outcomes {
            println!(
                "  check {name}: {} ({detail})",
                if *pass { "PASS" } else { "FAIL" }
            );
            all_ok &= pass;
        }
        if !all_ok {
            return Ok(ExitCode::from(3));
        }
    }
    Ok(ExitCode::SUCCESS)
}

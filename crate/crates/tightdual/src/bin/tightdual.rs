//! Command-line front end: solve a case to a certified lower bound, sweep
//! the stabilization parameter, batch-benchmark a case directory, or dump
//! intermediate model blocks as JSON.
//!
//! Log level comes from the RUST_LOG environment variable.

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tightdual::certify::{eps_sweep, DEFAULT_DELTA};
use tightdual::fosolve::{SolveConfig, SolveError, StepRule};
use tightdual::netio;
use tightdual::report::{self, RunError};

#[derive(Parser)]
#[command(
    name = "tightdual",
    about = "Certified dual lower bounds for the Jabr cone relaxation of AC optimal power flow",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one case and print a run record as JSON.
    Solve(SolveArgs),
    /// Solve across a list of stabilization values and emit CSV.
    Sweep(SweepArgs),
    /// Run every .m case in a directory and emit a JSON report.
    Bench(BenchArgs),
    /// Dump the parsed network or the canonical blocks as JSON.
    Dump(DumpArgs),
}

#[derive(Args)]
struct SolverOpts {
    /// Stabilization added to replacement denominators.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    /// Face-projection threshold.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 480_000)]
    max_iter: usize,
    /// Iterations per step/smoothing schedule stage.
    #[arg(long, default_value_t = 30_000)]
    stage_iters: usize,
    /// Relative best-objective progress threshold for early stop.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Progress window, in iterations.
    #[arg(long, default_value_t = 30_000)]
    patience: usize,
    /// Seed for the optional random warm-start jitter.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative warm-start jitter magnitude.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Initial step size of the adaptive rule.
    #[arg(long, default_value_t = 1.0)]
    step0: f64,
    /// Per-stage step multiplier.
    #[arg(long, default_value_t = 0.5)]
    step_decay: f64,
    /// Initial pseudo-Huber smoothing width (0 disables smoothing).
    #[arg(long, default_value_t = 1e3)]
    smooth0: f64,
}

impl SolverOpts {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            eps: self.eps,
            max_iter: self.max_iter,
            step_rule: StepRule::Adaptive {
                step: self.step0,
                decay: 0.999,
                momentum: 0.9,
            },
            stage_iters: self.stage_iters,
            step_decay: self.step_decay,
            tol_rel: self.tol,
            patience: self.patience,
            seed: self.seed,
            init_jitter: self.jitter,
            smoothing: if self.smooth0 > 0.0 {
                Some(tightdual::fosolve::Smoothing {
                    initial: self.smooth0,
                    ..Default::default()
                })
            } else {
                None
            },
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// MATPOWER case file.
    case: PathBuf,
    #[command(flatten)]
    solver: SolverOpts,
    /// Reference objective for gap reporting (overrides the bundled table).
    #[arg(long)]
    reference: Option<f64>,
    /// Also write the run record to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// MATPOWER case file.
    case: PathBuf,
    #[command(flatten)]
    solver: SolverOpts,
    /// Comma-separated stabilization values, ascending.
    #[arg(long, default_value = "1e-8,1e-6,1e-4,1e-2,1")]
    eps_list: String,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of .m case files.
    dir: PathBuf,
    #[command(flatten)]
    solver: SolverOpts,
    /// JSON file mapping case name to reference objective.
    #[arg(long)]
    references: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    /// MATPOWER case file.
    case: PathBuf,
    /// What to dump.
    #[arg(long, value_parser = ["network", "canon"], default_value = "network")]
    what: String,
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Dump(args) => cmd_dump(args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let config = args.solver.config();
    match report::run_case(&args.case, &config, args.solver.delta, args.reference) {
        Ok(record) => {
            let json = serde_json::to_string_pretty(&record)?;
            println!("{json}");
            if let Some(out) = args.out {
                std::fs::write(out, json)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(RunError::Solve(SolveError::Numerical { iteration, dump })) => {
            let dump_path = args
                .out
                .unwrap_or_else(|| PathBuf::from("tightdual-failure.json"))
                .with_extension("iterate.json");
            std::fs::write(&dump_path, serde_json::to_string_pretty(&dump)?)?;
            eprintln!(
                "error: objective became non-finite at iteration {iteration}; \
                 iterate dumped to {}",
                dump_path.display()
            );
            Ok(ExitCode::from(3))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let eps_list: Vec<f64> = args
        .eps_list
        .split(',')
        .map(|tok| tok.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("bad --eps-list: {e}"))?;
    let problem = report::load_problem(&args.case)?;
    let table = eps_sweep(&problem, &eps_list, &args.solver.config())?;
    let csv = table.to_csv();
    match args.out {
        Some(path) => std::fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    let all_ok = table.rows.iter().all(|r| r.status == "ok");
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if let Some(jobs) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    let user_refs: Option<HashMap<String, f64>> = match &args.references {
        Some(path) => Some(serde_json::from_str(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    let lookup = |case: &str| -> Option<f64> {
        if let Some(map) = &user_refs {
            if let Some(v) = map.get(case) {
                return Some(*v);
            }
        }
        report::builtin_reference(case)
    };
    let config = args.solver.config();
    let bench = report::run_bench(&args.dir, &config, args.solver.delta, &lookup)?;
    let json = serde_json::to_string_pretty(&bench)?;
    println!("{json}");
    if let Some(out) = args.out {
        std::fs::write(out, json)?;
    }
    eprintln!(
        "bench: {} cases, {} certified, {} failed; mean gap {}%, mean projection time {} s",
        bench.summary.cases,
        bench.summary.certified,
        bench.summary.failures,
        bench
            .summary
            .mean_gap_percent
            .map(|g| format!("{g:.4}"))
            .unwrap_or_else(|| "n/a".into()),
        bench
            .summary
            .mean_projection_time_s
            .map(|t| format!("{t:.6}"))
            .unwrap_or_else(|| "n/a".into()),
    );
    Ok(if bench.summary.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_dump(args: DumpArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(&args.case)?;
    let name = args
        .case
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let network = netio::parse_matpower(&text, &name)?;
    let value = match args.what.as_str() {
        "network" => {
            for finding in netio::validate(&network) {
                log::warn!("{}", finding.message);
            }
            network.to_json()
        }
        "canon" => {
            let primal = tightdual::jabr::build_primal(&network)?;
            tightdual::canon::canonicalize(&primal)?.to_debug_json()
        }
        _ => unreachable!("clap validates --what"),
    };
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(ExitCode::SUCCESS)
}

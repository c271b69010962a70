use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use nsbundle::bench::{emit_report, run_suite, write_report, ReportFormat, SuiteConfig};
use nsbundle::checks::verify_all;
use nsbundle::model::BetaMode;
use nsbundle::oracle::{find_problem, list_problems};
use nsbundle::solvers::{Algorithm, SolverConfig};

#[derive(Parser)]
#[command(
    name = "nsbundle",
    version,
    about = "Accelerated bundle methods on the standard nonsmooth test set"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run algorithms on test problems and print a report.
    Run(RunArgs),
    /// List the test problems.
    Problems {
        /// Print the registry as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the oracle, model and momentum property checks.
    Verify {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Fpcpa,
    Fla,
    Fdsa,
    Cpba,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum BetaArg {
    Zero,
    Guler,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Csv,
    Json,
    Md,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Algorithm(s); repeat or separate with commas.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
    algo: Vec<AlgoArg>,
    #[arg(long, value_enum, default_value = "zero")]
    beta: BetaArg,
    /// Problem id(s) or name(s), or `all`.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    problem: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.8)]
    kappa: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Model floor for every selected problem (default: per-problem value).
    #[arg(long, allow_hyphen_values = true)]
    f_inf: Option<f64>,
    #[arg(long, default_value_t = 500)]
    max_steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    gap_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    delta_tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    report: ReportArg,
    /// Report file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one JSON-lines trace per run into this directory.
    #[arg(long)]
    trace_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn algorithms(args: &[AlgoArg]) -> Vec<Algorithm> {
    let mut out = Vec::new();
    for a in args {
        let picked: &[Algorithm] = match a {
            AlgoArg::Fpcpa => &[Algorithm::Fpcpa],
            AlgoArg::Fla => &[Algorithm::Fla],
            AlgoArg::Fdsa => &[Algorithm::Fdsa],
            AlgoArg::Cpba => &[Algorithm::Cpba],
            AlgoArg::All => &Algorithm::ALL,
        };
        for p in picked {
            if !out.contains(p) {
                out.push(*p);
            }
        }
    }
    out
}

fn problems(keys: &[String]) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for key in keys {
        if key.eq_ignore_ascii_case("all") {
            ids.extend(list_problems().iter().map(|p| p.id));
        } else {
            ids.push(find_problem(key)?.id);
        }
    }
    Ok(ids)
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let problem_ids = problems(&args.problem)?;
    let mut config = SuiteConfig {
        algorithms: algorithms(&args.algo),
        beta_mode: match args.beta {
            BetaArg::Zero => BetaMode::Zero,
            BetaArg::Guler => BetaMode::Guler,
        },
        problems: problem_ids.clone(),
        f_inf_overrides: BTreeMap::new(),
        base: SolverConfig {
            mu0: args.mu,
            kappa: args.kappa,
            sigma: args.sigma,
            max_steps: args.max_steps,
            gap_tol: args.gap_tol,
            delta_tol: args.delta_tol,
            ..SolverConfig::default()
        },
        trace_dir: args.trace_dir,
        ..SuiteConfig::default()
    };
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    if let Some(f_inf) = args.f_inf {
        config.f_inf_overrides = problem_ids.iter().map(|&id| (id, f_inf)).collect();
    }
    let format = match args.report {
        ReportArg::Csv => ReportFormat::Csv,
        ReportArg::Json => ReportFormat::Json,
        ReportArg::Md => ReportFormat::Markdown,
    };

    let rows = run_suite(&config)?;
    match &args.out {
        Some(path) => write_report(&rows, format, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_report(&rows, format, &mut lock)?;
            lock.flush()?;
        }
    }
    let failed: Vec<_> = rows.iter().filter(|r| r.is_error()).collect();
    for r in &failed {
        eprintln!(
            "error: {} on problem {} ({}): {}",
            r.algorithm,
            r.problem_id,
            r.problem,
            r.error.as_deref().unwrap_or("no termination")
        );
    }
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn list(json: bool) -> Result<ExitCode> {
    let problems = list_problems();
    if json {
        println!("{}", serde_json::to_string_pretty(&problems)?);
    } else {
        println!(
            "{:>3}  {:<13} {:>3}  {:>12}  {:>6}",
            "id", "name", "n", "f*", "f_inf"
        );
        for p in &problems {
            println!(
                "{:>3}  {:<13} {:>3}  {:>12}  {:>6}",
                p.id, p.name, p.dimension, p.optimal_value, p.f_inf_default
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(seed: u64) -> Result<ExitCode> {
    let reports = verify_all(seed).context("property checks could not run")?;
    let mut ok = true;
    for r in &reports {
        ok &= r.passed;
        println!(
            "{}  {:<40} worst {:.3e} over {}",
            if r.passed { "pass" } else { "FAIL" },
            r.name,
            r.worst,
            r.samples
        );
    }
    if !ok {
        bail!("some property checks failed");
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Problems { json } => list(json),
        Command::Verify { seed } => verify(seed),
    }
}

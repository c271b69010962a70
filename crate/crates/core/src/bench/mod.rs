//! Benchmark suite: every requested (algorithm, problem) pair run from the
//! registry starting point, summarized as one [`ResultRow`] each.

mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BetaMode;
use crate::oracle::{find_problem, list_problems, ProblemSpec};
use crate::solvers::{run, write_trace, Algorithm, RunOutput, SolverConfig, TraceHeader};

pub use report::{emit_report, parse_csv, write_report, ReportFormat};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub algorithms: Vec<Algorithm>,
    pub beta_mode: BetaMode,
    /// Problem ids; runs are reported in increasing id order.
    pub problems: Vec<usize>,
    /// Replaces the registry `f_inf` for the listed problems.
    pub f_inf_overrides: BTreeMap<usize, f64>,
    /// Shared parameters. `algorithm`, `beta_mode`, `f_inf` and
    /// `known_fstar` are filled in per run.
    pub base: SolverConfig,
    pub trace_dir: Option<PathBuf>,
    /// Worker threads; 1 runs serially on the calling thread.
    pub jobs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            algorithms: Algorithm::ALL.to_vec(),
            beta_mode: BetaMode::Zero,
            problems: list_problems().iter().map(|p| p.id).collect(),
            f_inf_overrides: BTreeMap::new(),
            base: SolverConfig::default(),
            trace_dir: None,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl SuiteConfig {
    /// Checks the configuration and resolves the problem list.
    pub fn resolve(&self) -> Result<Vec<ProblemSpec>> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithm selected".into()));
        }
        if self.problems.is_empty() {
            return Err(Error::InvalidConfig("no problem selected".into()));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidConfig("jobs must be at least 1".into()));
        }
        self.base.validate()?;
        for (id, f_inf) in &self.f_inf_overrides {
            if !self.problems.contains(id) {
                return Err(Error::InvalidConfig(format!(
                    "f_inf override for problem {id}, which is not selected"
                )));
            }
            if !f_inf.is_finite() {
                return Err(Error::InvalidConfig(format!("f_inf override {f_inf}")));
            }
        }
        let mut ids = self.problems.clone();
        ids.sort_unstable();
        ids.dedup();
        ids.iter().map(|id| find_problem(&id.to_string())).collect()
    }

    /// Full configuration of one run.
    pub fn run_config(&self, algorithm: Algorithm, problem: &ProblemSpec) -> SolverConfig {
        SolverConfig {
            algorithm,
            beta_mode: self.beta_mode,
            f_inf: self
                .f_inf_overrides
                .get(&problem.id)
                .copied()
                .unwrap_or(problem.f_inf_default),
            known_fstar: Some(problem.optimal_value),
            ..self.base.clone()
        }
    }
}

/// Summary of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub problem_id: usize,
    pub problem: String,
    /// Label with the momentum variant, e.g. `FDSA1`.
    pub algorithm: String,
    /// Descent steps; CPBA only.
    pub k_steps: Option<usize>,
    pub oracle_calls: usize,
    pub f_best: f64,
    /// `f_best - f*`.
    pub final_gap: f64,
    /// Termination reason, or `Error`.
    pub status: String,
    pub error: Option<String>,
    /// Largest scaled KKT residual over the subproblems of the run.
    pub max_kkt_residual: f64,
    /// Seconds; not part of the csv report.
    pub wall_time_s: f64,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    fn from_run(problem: &ProblemSpec, label: String, out: &RunOutput, wall: f64) -> Self {
        let status = match (&out.error, out.termination) {
            (Some(_), _) | (None, None) => "Error".to_string(),
            (None, Some(t)) => t.to_string(),
        };
        Self {
            problem_id: problem.id,
            problem: problem.name.clone(),
            algorithm: label,
            k_steps: (out.config.algorithm == Algorithm::Cpba).then_some(out.k_steps()),
            oracle_calls: out.oracle_calls(),
            f_best: out.state.f_best,
            final_gap: out.state.f_best - problem.optimal_value,
            status,
            error: out.error.as_ref().map(|e| e.to_string()),
            max_kkt_residual: out.max_kkt_residual(),
            wall_time_s: wall,
        }
    }

    fn failed(problem: &ProblemSpec, label: String, err: &Error, wall: f64) -> Self {
        Self {
            problem_id: problem.id,
            problem: problem.name.clone(),
            algorithm: label,
            k_steps: None,
            oracle_calls: 0,
            f_best: f64::NAN,
            final_gap: f64::NAN,
            status: "Error".into(),
            error: Some(err.to_string()),
            max_kkt_residual: 0.0,
            wall_time_s: wall,
        }
    }
}

/// A run together with its summary row.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub row: ResultRow,
    /// `None` when the solver could not even start.
    pub output: Option<RunOutput>,
}

/// Runs every selected pair and returns the rows, algorithms in the given
/// order and problems by increasing id.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<ResultRow>> {
    Ok(run_suite_detailed(config)?
        .into_iter()
        .map(|r| r.row)
        .collect())
}

/// Like [`run_suite`] but keeps the full run outputs.
pub fn run_suite_detailed(config: &SuiteConfig) -> Result<Vec<SuiteRun>> {
    let problems = resolve_with_dir(config)?;
    let tasks: Vec<(Algorithm, &ProblemSpec)> = config
        .algorithms
        .iter()
        .flat_map(|&a| problems.iter().map(move |p| (a, p)))
        .collect();
    let work =
        |&(algorithm, problem): &(Algorithm, &ProblemSpec)| run_one(config, algorithm, problem);
    if config.jobs == 1 {
        return Ok(tasks.iter().map(work).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| tasks.par_iter().map(work).collect()))
}

fn resolve_with_dir(config: &SuiteConfig) -> Result<Vec<ProblemSpec>> {
    let problems = config.resolve()?;
    if let Some(dir) = &config.trace_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    Ok(problems)
}

fn run_one(config: &SuiteConfig, algorithm: Algorithm, problem: &ProblemSpec) -> SuiteRun {
    let label = algorithm.label(config.beta_mode);
    let cfg = config.run_config(algorithm, problem);
    let start = Instant::now();
    let output = run(&cfg, problem);
    let wall = start.elapsed().as_secs_f64();
    let output = match output {
        Ok(out) => out,
        Err(e) => {
            return SuiteRun {
                row: ResultRow::failed(problem, label, &e, wall),
                output: None,
            }
        }
    };
    let mut row = ResultRow::from_run(problem, label.clone(), &output, wall);
    if let Some(dir) = &config.trace_dir {
        let path = trace_path(dir, &label, problem);
        let header = TraceHeader::new(problem.id, &problem.name, &output);
        if let Err(e) = write_trace(&path, &header, &output.records) {
            row.status = "Error".into();
            row.error = Some(io_error(&path, e).to_string());
        }
    }
    SuiteRun {
        row,
        output: Some(output),
    }
}

/// `<dir>/<LABEL>_<id>_<name>.jsonl`.
pub fn trace_path(dir: &Path, label: &str, problem: &ProblemSpec) -> PathBuf {
    dir.join(format!("{label}_{:02}_{}.jsonl", problem.id, problem.name))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

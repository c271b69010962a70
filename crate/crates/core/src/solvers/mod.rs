//! Accelerated proximal, level and doubly stabilized cutting-plane methods,
//! plus a classical proximal bundle method for comparison.
//!
//! A [`Solver`] owns one run. Each call to [`Solver::step`] performs exactly
//! one oracle call (after the initial one made by [`Solver::new`]) and
//! appends one [`IterationRecord`].

mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dist2, linearization_error, norm2, BetaMode, Bundle, Cut, NesterovState};
use crate::oracle::{Oracle, OracleResponse, ProblemSpec};
use crate::subqp::{
    compute_lower_bound, kkt_scale, solve_dsqp, solve_level_qp, solve_prox_qp, QPSolution,
    QpStatus, SubproblemInputs,
};

pub use trace::{read_trace, write_trace, TraceHeader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fpcpa,
    Fla,
    Fdsa,
    Cpba,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Cpba,
        Algorithm::Fpcpa,
        Algorithm::Fla,
        Algorithm::Fdsa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Fpcpa => "fpcpa",
            Algorithm::Fla => "fla",
            Algorithm::Fdsa => "fdsa",
            Algorithm::Cpba => "cpba",
        }
    }

    /// Name with the momentum variant suffix, e.g. `FDSA1`.
    pub fn label(self, beta: BetaMode) -> String {
        let base = self.as_str().to_uppercase();
        match (self, beta) {
            (Algorithm::Cpba, _) => base,
            (_, BetaMode::Zero) => format!("{base}1"),
            (_, BetaMode::Guler) => format!("{base}2"),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fpcpa" => Ok(Algorithm::Fpcpa),
            "fla" => Ok(Algorithm::Fla),
            "fdsa" => Ok(Algorithm::Fdsa),
            "cpba" => Ok(Algorithm::Cpba),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    pub beta_mode: BetaMode,
    pub mu0: f64,
    pub kappa: f64,
    pub sigma: f64,
    /// Lower bound imposed on the model in every subproblem.
    pub f_inf: f64,
    /// Oracle calls for the accelerated methods, descent steps for CPBA.
    pub max_steps: usize,
    pub gap_tol: f64,
    pub delta_tol: f64,
    pub known_fstar: Option<f64>,
    /// FDSA only: run with `level = +inf` throughout.
    #[serde(default)]
    pub level_disabled: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Fpcpa,
            beta_mode: BetaMode::Zero,
            mu0: 1.0,
            kappa: 0.8,
            sigma: 0.5,
            f_inf: -10.0,
            max_steps: 500,
            gap_tol: 1e-6,
            delta_tol: 1e-6,
            known_fstar: None,
            level_disabled: false,
        }
    }
}

impl SolverConfig {
    /// Defaults for `algorithm` on a registry problem, including its `f_inf`
    /// and known optimal value.
    pub fn for_problem(algorithm: Algorithm, problem: &ProblemSpec) -> Self {
        Self {
            algorithm,
            f_inf: problem.f_inf_default,
            known_fstar: Some(problem.optimal_value),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu0));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad(format!("kappa must lie in (0, 1), got {}", self.kappa));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return bad(format!("sigma must lie in (0, 1), got {}", self.sigma));
        }
        if !self.f_inf.is_finite() {
            return bad("f_inf must be finite".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if !(self.gap_tol >= 0.0 && self.delta_tol >= 0.0) {
            return bad("tolerances must be nonnegative".into());
        }
        if self.known_fstar.is_some_and(|f| !f.is_finite()) {
            return bad("known optimal value must be finite".into());
        }
        Ok(())
    }

    fn gap_reached(&self, f_best: f64) -> bool {
        self.known_fstar
            .is_some_and(|fstar| f_best - fstar <= self.gap_tol * (1.0 + f_best.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    GapReached,
    DeltaClosed,
    ZeroSubgradient,
    MaxSteps,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Termination::GapReached => "GapReached",
            Termination::DeltaClosed => "DeltaClosed",
            Termination::ZeroSubgradient => "ZeroSubgradient",
            Termination::MaxSteps => "MaxSteps",
        };
        f.write_str(s)
    }
}

/// One row per oracle call.
///
/// `f_y` and `eps_k`/`theta_k` describe the point just evaluated; the
/// remaining fields describe the subproblem solved right after it and are
/// `None` when the run stopped (or the method does not define them).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub f_y: f64,
    pub f_best: f64,
    pub f_low: Option<f64>,
    pub delta: Option<f64>,
    pub level: Option<f64>,
    pub mu_k: Option<f64>,
    pub t_k: Option<f64>,
    pub tau_k: Option<f64>,
    /// Linearization error of this point against the previous model.
    pub eps_k: Option<f64>,
    pub theta_k: Option<f64>,
    pub step_norm: Option<f64>,
    pub gamma_k: Option<f64>,
    pub descent_flag: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub k: usize,
    /// Stability center (`x^k`, or the serious point for CPBA).
    pub x: Vec<f64>,
    /// Last evaluated point.
    pub y: Vec<f64>,
    pub bundle: Bundle,
    pub nesterov: NesterovState,
    pub f_best: f64,
    pub x_best: Vec<f64>,
    pub f_low: f64,
    pub delta: f64,
    pub level: f64,
    pub mu_k: f64,
    pub gamma_prev: f64,
    pub theta: f64,
    pub eps_last: f64,
    pub oracle_calls: usize,
    pub mu_floor: f64,
    /// Value and subgradient at `y`.
    pub f_y: f64,
    pub g_y: Vec<f64>,
    /// Value at the stability center (CPBA).
    pub f_center: f64,
    /// Level multiplier of the first step, used by the FDSA bound.
    pub t0: Option<f64>,
}

/// A finished (or aborted) run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub config: SolverConfig,
    pub state: SolverState,
    pub records: Vec<IterationRecord>,
    pub termination: Option<Termination>,
    /// Set when the run aborted; `records` holds the partial trace.
    pub error: Option<Error>,
    /// `verify_kkt / kkt_scale` for every subproblem solved.
    pub kkt_residuals: Vec<f64>,
}

impl RunOutput {
    pub fn oracle_calls(&self) -> usize {
        self.state.oracle_calls
    }

    /// CPBA: serious steps. Other methods: the final step index.
    pub fn k_steps(&self) -> usize {
        self.state.k
    }

    pub fn max_kkt_residual(&self) -> f64 {
        self.kkt_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// `y_next + alpha (y_next - y_prev) + beta (y_next - x_prev)`.
pub fn update_center(
    y_next: &[f64],
    y_prev: &[f64],
    x_prev: &[f64],
    nesterov: &NesterovState,
) -> Vec<f64> {
    let (a, b) = (nesterov.alpha_k, nesterov.beta_k);
    y_next
        .iter()
        .zip(y_prev)
        .zip(x_prev)
        .map(|((yn, yp), xp)| yn + a * (yn - yp) + b * (yn - xp))
        .collect()
}

/// `theta + eps - theta / lambda`.
pub fn accumulate_error(theta_k: f64, eps_k: f64, lambda_k: f64) -> f64 {
    theta_k + eps_k - theta_k / lambda_k
}

/// Right-hand side of the convergence-rate estimate at step `k >= 1`:
/// `c mu ||x0 - x*||^2 / (t0 (k+1)^2) + theta_k`, with `c = 2` for the plain
/// update and `c = 1` for the Guler momentum.
pub fn complexity_bound(
    mu: f64,
    beta_mode: BetaMode,
    x0: &[f64],
    x_star: &[f64],
    t0: f64,
    k: usize,
    theta_k: f64,
) -> f64 {
    let c = match beta_mode {
        BetaMode::Zero => 2.0,
        BetaMode::Guler => 1.0,
    };
    let d = dist2(x0, x_star);
    let k1 = (k + 1) as f64;
    c * mu * d * d / (t0 * k1 * k1) + theta_k
}

pub struct Solver<'a> {
    config: SolverConfig,
    oracle: &'a dyn Oracle,
    state: SolverState,
    records: Vec<IterationRecord>,
    kkt_residuals: Vec<f64>,
    /// Quantities of the latest point waiting to be written with its step.
    pending_eps: Option<f64>,
    pending_descent: Option<bool>,
}

impl<'a> Solver<'a> {
    /// Validates the configuration and evaluates the oracle at `x0`.
    pub fn new(config: SolverConfig, oracle: &'a dyn Oracle, x0: &[f64]) -> Result<Self> {
        config.validate()?;
        let n = oracle.dimension();
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x0.len(),
            });
        }
        let resp = oracle.evaluate(x0)?;
        let mut bundle = Bundle::new(n);
        bundle.insert(Cut::new(x0.to_vec(), resp.value, resp.subgradient.clone())?)?;
        let state = SolverState {
            k: 0,
            x: x0.to_vec(),
            y: x0.to_vec(),
            bundle,
            nesterov: NesterovState::new(config.beta_mode),
            f_best: resp.value,
            x_best: x0.to_vec(),
            f_low: config.f_inf,
            delta: f64::INFINITY,
            level: f64::INFINITY,
            mu_k: if config.algorithm == Algorithm::Fla {
                1.0
            } else {
                config.mu0
            },
            gamma_prev: config.mu0,
            theta: 0.0,
            eps_last: 0.0,
            oracle_calls: 1,
            mu_floor: 1e-10 * norm2(&resp.subgradient),
            f_y: resp.value,
            g_y: resp.subgradient,
            f_center: resp.value,
            t0: None,
        };
        Ok(Self {
            config,
            oracle,
            state,
            records: Vec::new(),
            kkt_residuals: Vec::new(),
            pending_eps: None,
            pending_descent: None,
        })
    }

    pub fn state(&self) -> &SolverState {
        &self.state
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Performs one step; returns the termination reason once the run stops.
    pub fn step(&mut self) -> Result<Option<Termination>> {
        match self.config.algorithm {
            Algorithm::Fpcpa => step_fpcpa(self),
            Algorithm::Fla => step_fla(self),
            Algorithm::Fdsa => step_fdsa(self),
            Algorithm::Cpba => step_cpba(self),
        }
    }

    /// Steps until termination or failure.
    pub fn run_to_end(mut self) -> RunOutput {
        let (termination, error) = loop {
            match self.step() {
                Ok(Some(t)) => break (Some(t), None),
                Ok(None) => {}
                Err(e) => break (None, Some(e)),
            }
        };
        RunOutput {
            config: self.config,
            state: self.state,
            records: self.records,
            termination,
            error,
            kkt_residuals: self.kkt_residuals,
        }
    }

    fn base_record(&self) -> IterationRecord {
        let s = &self.state;
        let accelerated = self.config.algorithm != Algorithm::Cpba;
        IterationRecord {
            k: s.k,
            f_y: s.f_y,
            f_best: s.f_best,
            f_low: None,
            delta: None,
            level: None,
            mu_k: None,
            t_k: None,
            tau_k: None,
            eps_k: self.pending_eps,
            theta_k: accelerated.then_some(s.theta),
            step_norm: None,
            gamma_k: None,
            descent_flag: self.pending_descent,
        }
    }

    fn common_stop(&self) -> Option<Termination> {
        if self.state.g_y.iter().all(|g| *g == 0.0) {
            return Some(Termination::ZeroSubgradient);
        }
        if self.config.gap_reached(self.state.f_best) {
            return Some(Termination::GapReached);
        }
        None
    }

    fn inputs(&self, mu: Option<f64>, level: f64) -> SubproblemInputs<'_> {
        SubproblemInputs {
            bundle: &self.state.bundle,
            center: &self.state.x,
            mu,
            level,
            r_floor: self.config.f_inf,
        }
    }

    fn log_kkt(&mut self, inputs_mu: Option<f64>, level: f64, sol: &QPSolution) {
        let scale = kkt_scale(&self.inputs(inputs_mu, level), sol);
        self.kkt_residuals.push(sol.kkt_residual / scale);
    }

    /// Refreshes `f_low`, `delta` and `level` from the current bundle.
    fn refresh_level(&mut self) {
        let lp = compute_lower_bound(&self.state.bundle, self.config.f_inf);
        let s = &mut self.state;
        s.f_low = s.f_low.max(lp).min(s.f_best);
        s.delta = s.f_best - s.f_low;
        s.level = s.f_best - self.config.kappa * s.delta;
    }

    /// Evaluates the oracle at `y`, updating the counters, `f_best` and the
    /// linearization error against the current model, then stores the cut.
    fn evaluate(&mut self, y: Vec<f64>) -> Result<(OracleResponse, f64)> {
        let resp = self.oracle.evaluate(&y)?;
        let s = &mut self.state;
        s.oracle_calls += 1;
        let (model, _) = s.bundle.eval(&y)?;
        let eps = linearization_error(resp.value, model.max(self.config.f_inf))?;
        if resp.value < s.f_best {
            s.f_best = resp.value;
            s.x_best = y.clone();
        }
        s.bundle
            .insert(Cut::new(y.clone(), resp.value, resp.subgradient.clone())?)?;
        s.f_y = resp.value;
        s.g_y = resp.subgradient.clone();
        s.y = y;
        Ok((resp, eps))
    }

    /// Shared tail of the accelerated methods: moves the center, evaluates
    /// the new point and advances the momentum sequence.
    fn accelerated_move(&mut self, y_next: Vec<f64>) -> Result<()> {
        let x_next = update_center(&y_next, &self.state.y, &self.state.x, &self.state.nesterov);
        let (_, eps) = self.evaluate(y_next)?;
        let s = &mut self.state;
        s.theta = accumulate_error(s.theta, eps, s.nesterov.lambda_k);
        s.eps_last = eps;
        s.x = x_next;
        s.nesterov = s.nesterov.advance();
        s.k += 1;
        self.pending_eps = Some(eps);
        Ok(())
    }

    fn stop_with(
        &mut self,
        record: IterationRecord,
        t: Termination,
    ) -> Result<Option<Termination>> {
        self.records.push(record);
        Ok(Some(t))
    }

    fn out_of_calls(&self) -> bool {
        self.state.oracle_calls >= self.config.max_steps
    }
}

fn check_solution(sol: &QPSolution, what: &str) -> Result<()> {
    if sol.status == QpStatus::Infeasible {
        return Err(Error::Infeasible(format!(
            "{what} subproblem has no solution"
        )));
    }
    Ok(())
}

/// One step of the fast proximal cutting-plane method.
pub fn step_fpcpa(solver: &mut Solver) -> Result<Option<Termination>> {
    let mut record = solver.base_record();
    if let Some(t) = solver.common_stop() {
        return solver.stop_with(record, t);
    }
    if solver.out_of_calls() {
        return solver.stop_with(record, Termination::MaxSteps);
    }
    let mu = solver.config.mu0;
    let sol = solve_prox_qp(&solver.inputs(Some(mu), f64::INFINITY))?;
    check_solution(&sol, "proximal")?;
    solver.log_kkt(Some(mu), f64::INFINITY, &sol);
    record.mu_k = Some(mu);
    record.t_k = Some(sol.t);
    record.tau_k = Some(0.0);
    record.gamma_k = sol.gamma;
    record.step_norm = Some(dist2(&solver.state.x, &sol.x));
    solver.records.push(record);
    solver.accelerated_move(sol.x)?;
    Ok(None)
}

/// One step of the fast level method.
pub fn step_fla(solver: &mut Solver) -> Result<Option<Termination>> {
    let mut record = solver.base_record();
    if let Some(t) = solver.common_stop() {
        return solver.stop_with(record, t);
    }
    solver.refresh_level();
    let s = &solver.state;
    record.f_low = Some(s.f_low);
    record.delta = Some(s.delta);
    record.level = Some(s.level);
    if s.delta <= solver.config.delta_tol {
        return solver.stop_with(record, Termination::DeltaClosed);
    }
    if solver.out_of_calls() {
        return solver.stop_with(record, Termination::MaxSteps);
    }
    let level = s.level;
    let sol = solve_level_qp(&solver.inputs(None, level))?;
    check_solution(&sol, "level")?;
    solver.log_kkt(None, level, &sol);
    record.mu_k = Some(1.0);
    record.t_k = Some(if sol.status == QpStatus::Degenerate {
        1.0
    } else {
        sol.t
    });
    record.tau_k = Some(0.0);
    record.step_norm = Some(dist2(&solver.state.x, &sol.x));
    solver.records.push(record);
    solver.accelerated_move(sol.x)?;
    Ok(None)
}

/// One step of the fast doubly stabilized method.
pub fn step_fdsa(solver: &mut Solver) -> Result<Option<Termination>> {
    let mut record = solver.base_record();
    if let Some(t) = solver.common_stop() {
        return solver.stop_with(record, t);
    }
    let level = if solver.config.level_disabled {
        f64::INFINITY
    } else {
        solver.refresh_level();
        let s = &solver.state;
        record.f_low = Some(s.f_low);
        record.delta = Some(s.delta);
        record.level = Some(s.level);
        if s.delta <= solver.config.delta_tol {
            return solver.stop_with(record, Termination::DeltaClosed);
        }
        s.level
    };
    if solver.out_of_calls() {
        return solver.stop_with(record, Termination::MaxSteps);
    }
    let mu = solver.state.mu_k;
    let sol = solve_dsqp(&solver.inputs(Some(mu), level))?;
    check_solution(&sol, "doubly stabilized")?;
    solver.log_kkt(Some(mu), level, &sol);
    let gamma = mu / (1.0 + sol.tau);
    record.mu_k = Some(mu);
    record.t_k = Some(sol.t);
    record.tau_k = Some(sol.tau);
    record.gamma_k = Some(gamma);
    record.step_norm = Some(dist2(&solver.state.x, &sol.x));
    solver.records.push(record);

    let s = &mut solver.state;
    if s.t0.is_none() {
        s.t0 = Some(1.0 + sol.tau);
    }
    s.gamma_prev = gamma;
    s.mu_k = gamma.max(s.mu_floor);
    solver.accelerated_move(sol.x)?;
    Ok(None)
}

/// One oracle call of the proximal bundle method: a trial point around the
/// serious point, then either a descent (serious) step or a null step.
pub fn step_cpba(solver: &mut Solver) -> Result<Option<Termination>> {
    let mut record = solver.base_record();
    if let Some(t) = solver.common_stop() {
        return solver.stop_with(record, t);
    }
    let cfg = &solver.config;
    if solver.state.k >= cfg.max_steps || solver.state.oracle_calls >= 20 * cfg.max_steps {
        return solver.stop_with(record, Termination::MaxSteps);
    }
    let mu = cfg.mu0;
    let sol = solve_prox_qp(&solver.inputs(Some(mu), f64::INFINITY))?;
    check_solution(&sol, "proximal")?;
    solver.log_kkt(Some(mu), f64::INFINITY, &sol);
    let predicted = solver.state.f_center - sol.r;
    if solver.config.known_fstar.is_none()
        && predicted <= solver.config.delta_tol * (1.0 + solver.state.f_center.abs())
    {
        return solver.stop_with(record, Termination::DeltaClosed);
    }
    record.mu_k = Some(mu);
    record.t_k = Some(sol.t);
    record.tau_k = Some(0.0);
    record.gamma_k = sol.gamma;
    record.step_norm = Some(dist2(&solver.state.x, &sol.x));
    solver.records.push(record);

    let z = sol.x;
    let (resp, eps) = solver.evaluate(z.clone())?;
    solver.pending_eps = Some(eps);
    let s = &mut solver.state;
    s.eps_last = eps;
    let descent = resp.value <= s.f_center - solver.config.sigma * predicted;
    if descent {
        s.x = z;
        s.f_center = resp.value;
        s.k += 1;
    }
    // the flag belongs to the row of the point just evaluated
    solver.pending_descent = Some(descent);
    Ok(None)
}

/// Runs `config` on a registry problem from its standard starting point.
pub fn run(config: &SolverConfig, problem: &ProblemSpec) -> Result<RunOutput> {
    let solver = Solver::new(config.clone(), problem, &problem.start_point)?;
    Ok(solver.run_to_end())
}

/// Runs `config` on an arbitrary oracle.
pub fn run_oracle(config: &SolverConfig, oracle: &dyn Oracle, x0: &[f64]) -> Result<RunOutput> {
    let solver = Solver::new(config.clone(), oracle, x0)?;
    Ok(solver.run_to_end())
}

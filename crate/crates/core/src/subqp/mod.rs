//! Stabilized subproblems over a cutting-plane model and the lower-bound LP.
//!
//! All three quadratic subproblems share the epigraph form
//!
//! ```text
//!     minimize    r + (mu/2) ||x - c||^2
//!     subject to  cut_i(x) <= r,   r >= r_floor,   r <= level
//! ```
//!
//! (the level projection drops the proximal term and fixes `r = level`) and
//! are solved through their duals, see [`dual`]. The floor `r >= r_floor` is
//! handled as one more cut with zero subgradient.

mod dual;
mod simplex;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, Bundle};

use dual::{DualOutcome, DualProblem, DualSolution, SumRule};
use simplex::LpOutcome;

/// Data shared by every subproblem.
#[derive(Debug, Clone, Copy)]
pub struct SubproblemInputs<'a> {
    pub bundle: &'a Bundle,
    pub center: &'a [f64],
    /// Proximity weight; ignored by the level projection.
    pub mu: Option<f64>,
    /// `f64::INFINITY` when there is no level constraint.
    pub level: f64,
    pub r_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    /// Prox / doubly stabilized: the floor is active. Level projection: the
    /// center already lies in the level set.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPSolution {
    pub x: Vec<f64>,
    pub r: f64,
    pub cut_duals: Vec<f64>,
    /// Multiplier of `r >= r_floor`.
    pub floor_dual: f64,
    /// Sum of `cut_duals`.
    pub t: f64,
    /// Multiplier of `r <= level`.
    pub tau: f64,
    /// `mu / (1 + tau)` for the proximal problems.
    pub gamma: Option<f64>,
    /// Unscaled residual from [`verify_kkt`]; compare against
    /// `tol * kkt_scale(..)`.
    pub kkt_residual: f64,
    pub status: QpStatus,
}

impl QPSolution {
    fn infeasible(dim: usize, cuts: usize) -> Self {
        Self {
            x: vec![f64::NAN; dim],
            r: f64::NAN,
            cut_duals: vec![0.0; cuts],
            floor_dual: 0.0,
            t: 0.0,
            tau: 0.0,
            gamma: None,
            kkt_residual: f64::NAN,
            status: QpStatus::Infeasible,
        }
    }
}

fn validate(inputs: &SubproblemInputs) -> Result<()> {
    if inputs.bundle.is_empty() {
        return Err(Error::EmptyBundle);
    }
    if inputs.center.len() != inputs.bundle.dimension() {
        return Err(Error::DimensionMismatch {
            expected: inputs.bundle.dimension(),
            got: inputs.center.len(),
        });
    }
    if inputs.center.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("subproblem center"));
    }
    if !inputs.r_floor.is_finite() {
        return Err(Error::NonFinite("r_floor"));
    }
    if inputs.level.is_nan() || inputs.level == f64::NEG_INFINITY {
        return Err(Error::InvalidConfig(format!("level {}", inputs.level)));
    }
    Ok(())
}

fn require_mu(inputs: &SubproblemInputs) -> Result<f64> {
    match inputs.mu {
        Some(mu) if mu > 0.0 && mu.is_finite() => Ok(mu),
        other => Err(Error::InvalidConfig(format!(
            "proximity weight must be positive, got {other:?}"
        ))),
    }
}

fn build_dual(
    inputs: &SubproblemInputs,
    mu: f64,
    shift: f64,
    with_floor: bool,
    rule: SumRule,
) -> DualProblem {
    let dim = inputs.bundle.dimension();
    let cuts = inputs.bundle.cuts();
    let count = cuts.len() + usize::from(with_floor);
    let mut columns = Vec::with_capacity(dim * count);
    let mut offsets = Vec::with_capacity(count);
    for cut in cuts {
        columns.extend_from_slice(cut.subgradient());
        offsets.push(cut.eval_unchecked(inputs.center) - shift);
    }
    if with_floor {
        columns.extend(std::iter::repeat_n(0.0, dim));
        offsets.push(inputs.r_floor - shift);
    }
    DualProblem {
        dim,
        columns,
        offsets,
        mu,
        rule,
    }
}

fn run_dual(problem: &DualProblem) -> Result<Option<DualSolution>> {
    let max_iter = 50 * (problem.count() + problem.dim) + 100;
    match problem.solve(max_iter) {
        DualOutcome::Solved(sol) => Ok(Some(sol)),
        DualOutcome::Unbounded => Ok(None),
        DualOutcome::IterationLimit => Err(Error::SolverFailure(format!(
            "dual active set did not converge in {max_iter} iterations ({} cuts, dimension {})",
            problem.count(),
            problem.dim
        ))),
    }
}

fn primal_point(center: &[f64], aggregate: &[f64], mu: f64) -> Vec<f64> {
    center
        .iter()
        .zip(aggregate)
        .map(|(c, s)| c - s / mu)
        .collect()
}

fn model_or_floor(inputs: &SubproblemInputs, x: &[f64]) -> f64 {
    inputs
        .bundle
        .cuts()
        .iter()
        .map(|c| c.eval_unchecked(x))
        .fold(inputs.r_floor, f64::max)
}

/// Proximal cutting-plane step: minimizes `model(x) + (mu/2)||x - c||^2` with
/// the model clipped below at `r_floor`.
pub fn solve_prox_qp(inputs: &SubproblemInputs) -> Result<QPSolution> {
    validate(inputs)?;
    let mu = require_mu(inputs)?;
    let problem = build_dual(inputs, mu, 0.0, true, SumRule::Equal);
    let Some(sol) = run_dual(&problem)? else {
        return Err(Error::SolverFailure("prox dual reported unbounded".into()));
    };
    let m = inputs.bundle.len();
    let x = primal_point(inputs.center, &sol.aggregate, mu);
    let r = model_or_floor(inputs, &x);
    let cut_duals = sol.weights[..m].to_vec();
    let floor_dual = sol.weights[m];
    let t = cut_duals.iter().sum();
    finish(
        inputs,
        QPSolution {
            x,
            r,
            cut_duals,
            floor_dual,
            t,
            tau: 0.0,
            gamma: Some(mu),
            kkt_residual: 0.0,
            status: if floor_dual > 0.0 {
                QpStatus::Degenerate
            } else {
                QpStatus::Optimal
            },
        },
    )
}

/// Euclidean projection of the center onto `{x : model(x) <= level}`.
pub fn solve_level_qp(inputs: &SubproblemInputs) -> Result<QPSolution> {
    validate(inputs)?;
    let level = inputs.level;
    if !level.is_finite() {
        return Err(Error::InvalidConfig(
            "level projection needs a finite level".into(),
        ));
    }
    let (dim, m) = (inputs.bundle.dimension(), inputs.bundle.len());
    if level < inputs.r_floor {
        return Ok(QPSolution::infeasible(dim, m));
    }
    let problem = build_dual(inputs, 1.0, level, false, SumRule::Free);
    let Some(sol) = run_dual(&problem)? else {
        return Ok(QPSolution::infeasible(dim, m));
    };
    let t: f64 = sol.weights.iter().sum();
    let (x, status) = if t == 0.0 {
        (inputs.center.to_vec(), QpStatus::Degenerate)
    } else {
        (
            primal_point(inputs.center, &sol.aggregate, 1.0),
            QpStatus::Optimal,
        )
    };
    finish(
        inputs,
        QPSolution {
            x,
            r: level,
            cut_duals: sol.weights,
            floor_dual: 0.0,
            t,
            tau: 0.0,
            gamma: None,
            kkt_residual: 0.0,
            status,
        },
    )
}

/// Doubly stabilized step: proximal term plus the level constraint
/// `r <= level`. With `level = +inf` this is exactly [`solve_prox_qp`].
pub fn solve_dsqp(inputs: &SubproblemInputs) -> Result<QPSolution> {
    validate(inputs)?;
    let mu = require_mu(inputs)?;
    let level = inputs.level;
    if level == f64::INFINITY {
        return solve_prox_qp(inputs);
    }
    let (dim, m) = (inputs.bundle.dimension(), inputs.bundle.len());
    if level < inputs.r_floor {
        return Ok(QPSolution::infeasible(dim, m));
    }
    let problem = build_dual(inputs, mu, level, true, SumRule::AtLeast);
    let Some(sol) = run_dual(&problem)? else {
        return Err(Error::SolverFailure(
            "doubly stabilized dual reported unbounded".into(),
        ));
    };
    let x = primal_point(inputs.center, &sol.aggregate, mu);
    let cut_duals = sol.weights[..m].to_vec();
    let floor_dual = sol.weights[m];
    let (t, tau, r) = if sol.sum_active {
        (1.0 - floor_dual, 0.0, model_or_floor(inputs, &x))
    } else {
        let total: f64 = sol.weights.iter().sum();
        let tau = (total - 1.0).max(0.0);
        let r = if tau > 0.0 {
            level
        } else {
            model_or_floor(inputs, &x)
        };
        (total - floor_dual, tau, r)
    };
    finish(
        inputs,
        QPSolution {
            x,
            r,
            cut_duals,
            floor_dual,
            t,
            tau,
            gamma: Some(mu / (1.0 + tau)),
            kkt_residual: 0.0,
            status: if floor_dual > 0.0 {
                QpStatus::Degenerate
            } else {
                QpStatus::Optimal
            },
        },
    )
}

fn finish(inputs: &SubproblemInputs, mut sol: QPSolution) -> Result<QPSolution> {
    if sol.x.iter().any(|v| !v.is_finite()) || !sol.r.is_finite() {
        return Err(Error::NonFinite("subproblem solution"));
    }
    sol.kkt_residual = verify_kkt(inputs, &sol);
    Ok(sol)
}

/// Minimum of the model clipped below at `r_floor`, from a dense LP.
///
/// Solved in dual form: maximize `sum l_i a_i + nu r_floor` over
/// `sum l_i g_i = 0`, `sum l_i + nu = 1`, `l, nu >= 0`, with
/// `a_i = f(y_i) - <g_i, y_i>`. Any feasible dual point is a valid bound, so a
/// simplex failure falls back to `r_floor`.
pub fn compute_lower_bound(bundle: &Bundle, r_floor: f64) -> f64 {
    let n = bundle.dimension();
    let m = bundle.len();
    if m == 0 {
        return r_floor;
    }
    let vars = m + 1;
    let rows = n + 1;
    let mut a = vec![0.0; rows * vars];
    let mut b = vec![0.0; rows];
    let mut c = vec![0.0; vars];
    for (i, cut) in bundle.cuts().iter().enumerate() {
        for (row, g) in cut.subgradient().iter().enumerate() {
            a[row * vars + i] = *g;
        }
        a[n * vars + i] = 1.0;
        c[i] = -(cut.value() - dot(cut.subgradient(), cut.point()));
    }
    a[n * vars + m] = 1.0;
    c[m] = -r_floor;
    b[n] = 1.0;
    match simplex::solve_standard_form(&a, &b, &c) {
        LpOutcome::Optimal { value, .. } => (-value).max(r_floor),
        _ => r_floor,
    }
}

/// Scale used to turn [`verify_kkt`] residuals into relative ones:
/// `max(1, t) (1 + max |g| + |r|)`. Stationarity and complementarity terms
/// grow linearly with the multipliers, hence the factor `t`.
pub fn kkt_scale(inputs: &SubproblemInputs, sol: &QPSolution) -> f64 {
    let r = if sol.r.is_finite() { sol.r.abs() } else { 0.0 };
    let t = if sol.t.is_finite() {
        sol.t.max(1.0)
    } else {
        1.0
    };
    t * (1.0 + inputs.bundle.max_subgradient_norm() + r)
}

/// Recomputes the optimality conditions of `sol` from the raw inputs and
/// returns the largest violation (stationarity, feasibility,
/// complementarity, dual sign, and `t = sum(cut_duals)`).
///
/// `mu = None` checks the level projection; otherwise the doubly stabilized
/// system, which covers the prox problem when `level = +inf`.
pub fn verify_kkt(inputs: &SubproblemInputs, sol: &QPSolution) -> f64 {
    let cuts = inputs.bundle.cuts();
    if sol.status == QpStatus::Infeasible || sol.cut_duals.len() != cuts.len() {
        return f64::INFINITY;
    }
    let n = inputs.bundle.dimension();
    let mut worst = 0.0_f64;
    let mut note = |v: f64| {
        worst = worst.max(if v.is_nan() { f64::INFINITY } else { v });
    };

    let mut stationarity = vec![0.0; n];
    let weight = inputs.mu.unwrap_or(1.0);
    for (s, (x, c)) in stationarity.iter_mut().zip(sol.x.iter().zip(inputs.center)) {
        *s = weight * (x - c);
    }
    let mut lambda_sum = 0.0;
    for (cut, lambda) in cuts.iter().zip(&sol.cut_duals) {
        lambda_sum += lambda;
        note(-lambda);
        for (s, g) in stationarity.iter_mut().zip(cut.subgradient()) {
            *s += lambda * g;
        }
    }
    if sol.status == QpStatus::Degenerate && inputs.mu.is_none() {
        // projection of a point already in the level set
        let (m, _) = inputs.bundle.eval(&sol.x).unwrap_or((f64::INFINITY, 0));
        note(m - inputs.level);
        note(lambda_sum.abs());
        note(crate::model::dist2(&sol.x, inputs.center));
        return worst;
    }
    stationarity.iter().for_each(|s| note(s.abs()));
    note((sol.t - lambda_sum).abs());
    note(-sol.floor_dual);
    note(-sol.tau);

    let bound = if inputs.mu.is_some() {
        note((1.0 - lambda_sum - sol.floor_dual + sol.tau).abs());
        note(inputs.r_floor - sol.r);
        note(sol.floor_dual * (sol.r - inputs.r_floor).abs());
        if inputs.level.is_finite() {
            note(sol.r - inputs.level);
            note(sol.tau * (inputs.level - sol.r).abs());
        } else {
            note(sol.tau.abs());
        }
        sol.r
    } else {
        note(inputs.r_floor - inputs.level);
        inputs.level
    };
    for (cut, lambda) in cuts.iter().zip(&sol.cut_duals) {
        let slack = bound - cut.eval_unchecked(&sol.x);
        note(-slack);
        note(lambda * slack.abs());
    }
    worst
}

/// Writes the subproblem in a plain-text format for offline replay.
pub fn dump_subproblem<W: Write>(inputs: &SubproblemInputs, out: &mut W) -> std::io::Result<()> {
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:e}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(out, "dimension {}", inputs.bundle.dimension())?;
    writeln!(out, "center {}", fmt(inputs.center))?;
    match inputs.mu {
        Some(mu) => writeln!(out, "mu {mu:e}")?,
        None => writeln!(out, "mu none")?,
    }
    writeln!(out, "level {:e}", inputs.level)?;
    writeln!(out, "r_floor {:e}", inputs.r_floor)?;
    writeln!(out, "cuts {}", inputs.bundle.len())?;
    for cut in inputs.bundle.cuts() {
        writeln!(
            out,
            "cut {:e} | {} | {}",
            cut.value(),
            fmt(cut.point()),
            fmt(cut.subgradient())
        )?;
    }
    Ok(())
}

//! Cuts, the cutting-plane lower model and the accelerated momentum sequence.
//!
//! A [`Cut`] stores one oracle answer `(y, f(y), g)`; a [`Bundle`] collects cuts
//! and evaluates the piecewise-linear minorant
//!
//! ```text
//!     model(x) = max_i  f(y_i) + <g_i, x - y_i>
//! ```
//!
//! [`NesterovState`] carries the `lambda_k` sequence
//! `lambda_{k+1} = (1 + sqrt(1 + 4 lambda_k^2)) / 2` with the derived momentum
//! coefficients used to move the stability center.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack allowed when a linearization error comes out negative.
pub const LOWER_MODEL_TOL: f64 = 1e-9;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One linearization of the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    point: Vec<f64>,
    value: f64,
    subgradient: Vec<f64>,
}

impl Cut {
    pub fn new(point: Vec<f64>, value: f64, subgradient: Vec<f64>) -> Result<Self> {
        if point.len() != subgradient.len() {
            return Err(Error::DimensionMismatch {
                expected: point.len(),
                got: subgradient.len(),
            });
        }
        if !value.is_finite() || point.iter().chain(&subgradient).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cut"));
        }
        Ok(Self {
            point,
            value,
            subgradient,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn subgradient(&self) -> &[f64] {
        &self.subgradient
    }

    pub fn dimension(&self) -> usize {
        self.point.len()
    }

    /// `f(y) + <g, x - y>`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = self.value;
        for ((g, xi), yi) in self.subgradient.iter().zip(x).zip(&self.point) {
            acc += g * (xi - yi);
        }
        acc
    }
}

/// Free-function form of [`Cut::eval`].
pub fn cut_value(cut: &Cut, x: &[f64]) -> Result<f64> {
    cut.eval(x)
}

/// Ordered collection of cuts sharing one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    dimension: usize,
    cuts: Vec<Cut>,
    max_size: Option<usize>,
}

impl Bundle {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            cuts: Vec::new(),
            max_size: None,
        }
    }

    /// Bundle that discards its oldest cut once `max_size` cuts are stored.
    pub fn with_max_size(dimension: usize, max_size: usize) -> Self {
        Self {
            dimension,
            cuts: Vec::new(),
            max_size: Some(max_size.max(1)),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    /// Appends `cut`; returns `Ok(false)` when an identical `(point,
    /// subgradient)` pair is already stored.
    pub fn insert(&mut self, cut: Cut) -> Result<bool> {
        if cut.dimension() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: cut.dimension(),
            });
        }
        if self
            .cuts
            .iter()
            .any(|c| c.point == cut.point && c.subgradient == cut.subgradient)
        {
            return Ok(false);
        }
        if let Some(cap) = self.max_size {
            if self.cuts.len() == cap {
                self.cuts.remove(0);
            }
        }
        self.cuts.push(cut);
        Ok(true)
    }

    /// Model value at `x` and the lowest index attaining it.
    pub fn eval(&self, x: &[f64]) -> Result<(f64, usize)> {
        if self.cuts.is_empty() {
            return Err(Error::EmptyBundle);
        }
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, cut) in self.cuts.iter().enumerate() {
            let v = cut.eval_unchecked(x);
            if v > best.0 {
                best = (v, i);
            }
        }
        Ok(best)
    }

    pub(crate) fn max_subgradient_norm(&self) -> f64 {
        self.cuts
            .iter()
            .flat_map(|c| c.subgradient.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Free-function form of [`Bundle::eval`].
pub fn model_eval(bundle: &Bundle, x: &[f64]) -> Result<(f64, usize)> {
    bundle.eval(x)
}

/// Second momentum term of the center update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BetaMode {
    /// `beta_k = 0`: the plain accelerated update.
    #[default]
    Zero,
    /// `beta_k = lambda_k / lambda_{k+1}`.
    Guler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NesterovState {
    pub k: usize,
    pub lambda_k: f64,
    pub lambda_next: f64,
    pub alpha_k: f64,
    pub beta_k: f64,
    pub beta_mode: BetaMode,
}

fn next_lambda(lambda: f64) -> f64 {
    (1.0 + (1.0 + 4.0 * lambda * lambda).sqrt()) / 2.0
}

impl NesterovState {
    pub fn new(beta_mode: BetaMode) -> Self {
        Self::from_lambda(0, 1.0, beta_mode)
    }

    fn from_lambda(k: usize, lambda_k: f64, beta_mode: BetaMode) -> Self {
        let lambda_next = next_lambda(lambda_k);
        let beta_k = match beta_mode {
            BetaMode::Zero => 0.0,
            BetaMode::Guler => lambda_k / lambda_next,
        };
        Self {
            k,
            lambda_k,
            lambda_next,
            alpha_k: (lambda_k - 1.0) / lambda_next,
            beta_k,
            beta_mode,
        }
    }

    pub fn advance(&self) -> Self {
        Self::from_lambda(self.k + 1, self.lambda_next, self.beta_mode)
    }
}

/// Moves the sequence from index `k` to `k + 1`.
pub fn nesterov_advance(state: &NesterovState) -> NesterovState {
    state.advance()
}

/// `f(y) - model(y)`, with round-off negatives clamped to zero.
///
/// Anything below `-1e-9 (1 + |f(y)|)` means the model is not a minorant and
/// is reported as an error.
pub fn linearization_error(f_at_y: f64, model_at_y: f64) -> Result<f64> {
    if !f_at_y.is_finite() || !model_at_y.is_finite() {
        return Err(Error::NonFinite("linearization error"));
    }
    let eps = f_at_y - model_at_y;
    if eps < -LOWER_MODEL_TOL * (1.0 + f_at_y.abs()) {
        return Err(Error::LowerModelViolated {
            value: f_at_y,
            model: model_at_y,
        });
    }
    Ok(eps.max(0.0))
}

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("bundle is empty")]
    EmptyBundle,

    #[error("lower model violated: f = {value}, model = {model}")]
    LowerModelViolated { value: f64, model: f64 },

    #[error("subproblem is infeasible: {0}")]
    Infeasible(String),

    #[error("subproblem solver failed: {0}")]
    SolverFailure(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed report: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;

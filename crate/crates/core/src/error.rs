use thiserror::Error;

use crate::dsl::DslError;

/// Failure while evaluating an objective or constraint at a point.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("expected a {expected}-dimensional point, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero raised to a negative power")]
    ZeroToNegativePower,
    #[error("non-finite value {value} produced")]
    NonFinite { value: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("evaluation failed for individual {individual} at step {step}: {source}")]
    StepEvaluation {
        step: usize,
        individual: usize,
        #[source]
        source: EvalError,
    },
    #[error("invalid domain for x{index}: {reason}")]
    InvalidDomain { index: usize, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error(transparent)]
    Dsl(#[from] DslError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

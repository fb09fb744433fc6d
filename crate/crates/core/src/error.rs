use thiserror::Error;

/// Errors produced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("activation plan violation: {0}")]
    PlanViolation(String),
    #[error("numerical breakdown: {0}")]
    Numerical(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("prox oracle did not converge: {0}")]
    OracleFailure(String),
    #[error("reference solution not reached: {0}")]
    ReferenceFailure(String),
    #[error("normalized error undefined: initial point coincides with the reference")]
    UndefinedMetric,
    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

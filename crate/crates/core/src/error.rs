use thiserror::Error;

/// Errors raised by the numeric kernels and the margin analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("logit vector must contain at least one entry")]
    EmptyLogits,
    #[error("logit at index {index} is not finite ({value})")]
    NonFiniteLogit { index: usize, value: f64 },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("target category {target} out of range for {dim} categories")]
    TargetOutOfRange { target: usize, dim: usize },
    #[error("epsilon must be a positive finite number, got {0}")]
    InvalidEpsilon(f64),
    #[error("category count must be at least 2, got {0}")]
    TooFewCategories(usize),
    #[error("trial count must be at least 1")]
    NoTrials,
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;

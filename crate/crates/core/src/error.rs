use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("covariance not positive definite after jitter escalation")]
    NotPositiveDefinite,
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("archive is empty")]
    EmptyArchive,
    #[error("invalid reference point: {0}")]
    InvalidReferencePoint(&'static str),
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error("coordinate {index} = {value} outside [{lower}, {upper}]")]
    OutOfBounds { index: usize, value: f64, lower: f64, upper: f64 },
    #[error("fidelity {0} is not a level of the cost model")]
    UnknownFidelity(f64),
    #[error("invalid cost model: {0}")]
    InvalidCostModel(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

use thiserror::Error;

/// Errors raised by the library. Every variant corresponds to a violated
/// precondition or a failed numerical certificate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fitness must be strictly positive, got {value} at atom {index}")]
    NonPositiveFitness { index: usize, value: f64 },

    #[error("alpha = {alpha} outside [0, {n})")]
    AlphaOutOfRange { alpha: f64, n: usize },

    #[error("transport certificate failed: {0}")]
    Certificate(String),

    #[error("grid too coarse: cell width {width} exceeds sigma/2 = {limit}")]
    GridTooCoarse { width: f64, limit: f64 },

    #[error("grid lost {lost} probability mass in one step, tolerance {tol}")]
    MassLoss { lost: f64, tol: f64 },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

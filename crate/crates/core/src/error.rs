use thiserror::Error;

/// Errors produced by the active-learning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel matrix is ill-conditioned (condition estimate {condition_estimate:.3e}) even with jitter {jitter:e}")]
    IllConditioned { condition_estimate: f64, jitter: f64 },

    #[error("candidate duplicates a labeled point (Schur denominator {denominator:e})")]
    DuplicatePoint { denominator: f64 },

    #[error("candidate {0} lies outside the spline's knot range")]
    OutOfRange(f64),

    #[error("candidate pool is empty")]
    EmptyPool,

    #[error("invalid cluster spec: {0}")]
    Spec(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("csv ingestion failed at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

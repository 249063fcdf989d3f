use thiserror::Error;

/// Errors produced by the library.
///
/// Validation failures (shapes, parameter domains) are separated from
/// numerical failures (factorization, divergence) because callers map
/// them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max |M - M^T| = {max_delta:.3e})")]
    NotSymmetric { max_delta: f64 },

    #[error("matrix is not positive definite within jitter ladder (jitter_max = {jitter_max:.1e})")]
    NotPsdWithinJitter { jitter_max: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("variance entries must be strictly positive (found {value})")]
    NonPositiveVariance { value: f64 },

    #[error("dt must be strictly positive (found {value})")]
    NonPositiveDt { value: f64 },

    #[error("matrix is not a rotation (max |R^T R - I| = {max_delta:.3e})")]
    NotARotation { max_delta: f64 },

    #[error("state became non-finite during integration")]
    NonFiniteState,

    #[error("training loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize },

    #[error("problem size n = {n} exceeds the exact-inference guard ({max})")]
    TooLargeForExact { n: usize, max: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of numerics (as opposed to bad inputs/config).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPsdWithinJitter { .. }
                | Error::NonFiniteState
                | Error::NonFiniteLoss { .. }
        )
    }
}

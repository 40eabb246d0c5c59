use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty point configuration")]
    EmptyConfiguration,

    #[error("multi-index {0:?} is outside the basis truncation")]
    IndexOutOfTruncation(Vec<usize>),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("truncation insufficient: tail certificate {certificate:.3e} exceeds 1")]
    TruncationInsufficient { certificate: f64 },

    #[error("mass mismatch: {left} vs {right}")]
    MassMismatch { left: f64, right: f64 },

    #[error("non-convergence: {0}")]
    Convergence(String),

    #[error("proposal envelope violated: {0}")]
    EnvelopeViolation(String),

    #[error("discretization too coarse: {0}")]
    Discretization(String),

    #[error("sampler tuning failure: {0}")]
    Tuning(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Quadrature(_)
                | Error::TruncationInsufficient { .. }
                | Error::Convergence(_)
                | Error::EnvelopeViolation(_)
                | Error::Discretization(_)
                | Error::Tuning(_)
                | Error::TooLarge(_)
        )
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    /// The requested computation would exceed a fixed size limit.
    #[error("resource guard: {0}")]
    ResourceGuard(String),

    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    #[error("step {step} is not after the previously processed step {previous}")]
    OutOfOrderStep { step: u64, previous: u64 },

    #[error("clock has no renewal structure: {0}")]
    NoRenewal(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn dims(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch { expected: expected.to_string(), actual: actual.to_string() }
    }
}

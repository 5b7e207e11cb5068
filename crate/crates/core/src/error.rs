use thiserror::Error;

/// Errors raised by the library layers. The CLI maps these onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not self-adjoint (deviation {deviation:.3e} exceeds {tolerance:.1e})")]
    NotSelfAdjoint { deviation: f64, tolerance: f64 },

    #[error("variable index {index} out of range for a {d}-tuple")]
    VariableOutOfRange { index: usize, d: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown reference law `{0}`")]
    UnknownLaw(String),

    #[error("formula is not differentiable here: {0}")]
    NotDifferentiable(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the failure is a validation problem (bad input) rather than a
    /// numerical one.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::NotSelfAdjoint { .. }
                | Error::VariableOutOfRange { .. }
                | Error::Parse { .. }
                | Error::InvalidArgument(_)
                | Error::UnknownLaw(_)
                | Error::Json(_)
        )
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("eigensolver did not converge after {rotations} rotations (off-diagonal residual {residual:e})")]
    NoConvergence { rotations: usize, residual: f64 },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures of the numerical routines themselves, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::FitFailure(_))
    }
}

use thiserror::Error;

use crate::modulus::CapacityResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("point outside the map domain: {0}")]
    OutOfDomain(String),

    /// The solver hit its iteration cap; the last iterate is kept for inspection.
    #[error("solver did not converge after {} iterations (residual {:.3e})", .last.iterations, .last.residual)]
    Convergence { last: Box<CapacityResult> },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

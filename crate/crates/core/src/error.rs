//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid setting: {0}")]
    InvalidSetting(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The direction lies in the null space of the covariance, so the
    /// classifier statistics `(a, b)` are undefined.
    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("solver did not converge: {context} (last residual {residual:e})")]
    NoConvergence { context: String, residual: f64 },

    /// A sweep failed at one grid point; carries the offending weight.
    #[error("sweep point lambda={lambda}: {source}")]
    SweepPoint {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_lambda(self, lambda: f64) -> Error {
        Error::SweepPoint {
            lambda,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

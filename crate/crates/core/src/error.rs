use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Contract violations (misaligned grid functions, negative arguments where
/// only `s >= 0` is meaningful) are programming errors and panic instead.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("singular linearization: {0}")]
    SingularLinearization(String),

    #[error("solver failure after {iterations} iterations (residual {residual:.3e}): {reason}")]
    Solver {
        reason: String,
        iterations: usize,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

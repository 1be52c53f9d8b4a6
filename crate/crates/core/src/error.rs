use thiserror::Error;

/// Errors raised by kernel evaluation, the finite-width oracle and the learners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("input dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("training diverged at step {step} (loss {loss:.3e}); learning rate must stay below {bound:.6e}")]
    Diverged { step: usize, loss: f64, bound: f64 },

    #[error("malformed data at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::NonFinite(_) | Error::Solve(_) | Error::Diverged { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;

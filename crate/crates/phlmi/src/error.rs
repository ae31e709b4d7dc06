use thiserror::Error;

/// Errors produced by construction, synthesis, simulation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: String,
        got: String,
    },

    #[error("structural validation failed: {0}")]
    Structure(String),

    #[error("LMI infeasible: {diagnostic} (best margin {best_margin:.3e})")]
    Infeasible { diagnostic: String, best_margin: f64 },

    #[error("matrix ill-conditioned in {context}: cond = {cond:.3e}")]
    IllConditioned { context: String, cond: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration aborted at step {step} (t = {time:.6e}): {reason}")]
    Integration { step: usize, time: f64, reason: String },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn dimension(context: impl Into<String>, expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::Dimension {
            context: context.into(),
            expected: expected.into(),
            got: got.into(),
        }
    }
}

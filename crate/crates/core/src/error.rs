use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation requires a non-empty set")]
    EmptySet,

    #[error("circumference mismatch: {0} vs {1}")]
    CircumferenceMismatch(f64, f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid curve: {0}")]
    Curve(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// The estimate of `peer` held by `agent` became empty at `step`.
    #[error("estimator contradiction: agent {agent} lost peer {peer} at step {step}")]
    Contradiction { agent: usize, peer: usize, step: u64 },

    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

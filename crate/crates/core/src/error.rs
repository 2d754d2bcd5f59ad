use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulation laboratory.
#[derive(Debug, Error)]
pub enum NsdError {
    /// An instance failed validation (bad shapes, rows off the simplex, ...).
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// A caller passed an out-of-range or malformed argument.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An operation was called in the wrong lifecycle state.
    #[error("invalid state: {0}")]
    State(String),

    /// An experiment or policy configuration could not be resolved.
    #[error("configuration error: {0}")]
    Config(String),

    /// Policy and environment fell out of lock-step.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl NsdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        NsdError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = NsdError> = std::result::Result<T, E>;

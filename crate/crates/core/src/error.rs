//! Error types shared across the engine.

use std::path::PathBuf;

use crate::search::IterationRecord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error(transparent)]
    Srt(#[from] SrtError),

    #[error(transparent)]
    Backend(#[from] BackendError),

    /// A backend failed mid-search. `partial` holds the iterations that completed.
    #[error("search aborted after {} iteration(s): {source}", partial.len())]
    Search {
        source: BackendError,
        partial: Vec<IterationRecord>,
    },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}

/// SRT parse failure. `line` is 1-based in the source text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct SrtError {
    pub line: usize,
    pub message: String,
}

impl SrtError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

/// Failure talking to a detector, encoder or planner backend.
#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("failed to start backend `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },

    #[error("backend i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("backend closed the stream")]
    Closed,

    #[error("malformed backend message: {0}")]
    Protocol(String),

    #[error("backend reported: {0}")]
    Remote(String),

    #[error("http transport: {0}")]
    Http(String),

    #[error("bad backend spec `{0}` (expected stub:PATH, proc:CMDLINE or http:URL)")]
    Spec(String),

    #[error("backend fixture: {0}")]
    Fixture(String),
}

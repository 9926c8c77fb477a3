use std::path::PathBuf;

use thiserror::Error;

/// Coarse failure classes. The CLI maps each class onto a process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Dependency,
    Backend,
    DataIntegrity,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Dependency => 2,
            ErrorClass::Backend => 3,
            ErrorClass::DataIntegrity => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("conflict: {0}")]
    Conflict(String),

    #[error("incomplete input: {what}: {}", ids.join(", "))]
    IncompleteInput { what: String, ids: Vec<String> },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("stage `{stage}` requires: {}", requires.join(", "))]
    Dependency { stage: String, requires: Vec<String> },

    #[error("store at {0} is locked by another writer")]
    Locked(PathBuf),

    #[error(transparent)]
    Backend(#[from] crate::backend::BackendError),

    #[error("configuration: {0}")]
    Config(String),

    #[error("external tool `{tool}` unavailable: {message}")]
    ToolMissing { tool: String, message: String },

    #[error("media decode: {0}")]
    Decode(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::UnsupportedFormat(_) | Error::ToolMissing { .. } => ErrorClass::Usage,
            Error::Dependency { .. } | Error::Locked(_) => ErrorClass::Dependency,
            Error::Backend(_) => ErrorClass::Backend,
            _ => ErrorClass::DataIntegrity,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

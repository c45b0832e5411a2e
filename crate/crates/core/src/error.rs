use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("too many malformed rows: {malformed} of {total} (first at line {first_line})")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        first_line: usize,
    },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("dimension mismatch: model expects {expected} features (vocabulary {fingerprint:016x}), got {actual}")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        fingerprint: u64,
    },

    #[error("training failed: {0}")]
    Training(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("combination excluded: {0}")]
    Excluded(String),

    #[error("stale artifact {path}: fingerprint {found} does not match {expected}")]
    StaleArtifact {
        path: PathBuf,
        found: String,
        expected: String,
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
}

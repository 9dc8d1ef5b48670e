use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value produced by {0}")]
    NonFinite(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown label term(s): {}", .0.join(", "))]
    UnknownTerms(Vec<String>),

    #[error("duplicate identifier `{0}`")]
    DuplicateId(String),

    #[error("sequence `{id}` has length {len}, exceeding the maximum {max}")]
    TooLong { id: String, len: usize, max: usize },

    #[error("missing representation for `{0}`")]
    MissingId(String),

    #[error("representation width mismatch: {0}")]
    Width(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("checkpoint checksum mismatch for tensor `{0}`")]
    Checksum(String),

    #[error("checkpoint format version {found} is newer than supported version {supported}")]
    VersionAhead { found: u32, supported: u32 },

    #[error("config: {0}")]
    Config(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Diverged(_) | Error::NonFinite(_) | Error::Io { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, DrsaError>;

#[derive(Debug, Error)]
pub enum DrsaError {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("edge ({src}, {dst}) out of range for block of shape {n_src}x{n_dst}")]
    EdgeOutOfRange {
        src: usize,
        dst: usize,
        n_src: usize,
        n_dst: usize,
    },

    #[error("unknown node type '{0}'")]
    UnknownType(String),

    #[error("unknown relation '{0}'")]
    UnknownRelation(String),

    #[error("unknown strategy '{name}' (available: {available})")]
    UnknownStrategy { name: String, available: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch in {context}: {detail}")]
    DimensionMismatch {
        context: &'static str,
        detail: String,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(String),

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("oracle failure: {0}")]
    Oracle(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {field}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl DrsaError {
    pub(crate) fn dims(context: &'static str, detail: impl Into<String>) -> Self {
        DrsaError::DimensionMismatch {
            context,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DrsaError::Io {
            path: path.into(),
            source,
        }
    }
}

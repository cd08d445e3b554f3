use std::path::PathBuf;

use crate::data::GroupId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value {value} in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("{what} = {value} is outside its domain")]
    Domain { what: &'static str, value: f64 },

    #[error("group {group} has {size} samples, at least {needed} required")]
    GroupTooSmall {
        group: GroupId,
        size: usize,
        needed: usize,
    },

    #[error("unknown group {0}")]
    UnknownGroup(GroupId),

    #[error("unknown group label {0:?}")]
    UnknownGroupLabel(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("regularized normal equations are numerically singular")]
    SingularSystem,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("operation requires exactly two groups, model has {0}")]
    NotBinary(usize),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: String, msg: String },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("schema version mismatch: expected {expected}, found {}", found.map_or_else(|| "unreadable file".to_string(), |v| v.to_string()))]
    SchemaVersionMismatch { expected: u32, found: Option<u32> },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

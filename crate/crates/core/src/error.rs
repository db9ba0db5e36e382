use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, SpmlError>;

#[derive(Debug, Error)]
pub enum SpmlError {
    #[error("edge ({0}, {1}) references a node outside [0, {2})")]
    EdgeOutOfRange(usize, usize, usize),

    #[error("node {node}: feature index {index} is outside [0, {dim})")]
    FeatureOutOfRange { node: usize, index: usize, dim: usize },

    #[error("node {node}: feature indices must be strictly increasing")]
    UnsortedFeatures { node: usize },

    #[error("duplicate attribute row for node {0}")]
    DuplicateAttributeRow(usize),

    #[error("expected {expected} attribute rows, found {found}")]
    AttributeCount { expected: usize, found: usize },

    #[error("node index {index} out of range for graph with {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("task index {index} out of range for collection of {count} tasks")]
    TaskOutOfRange { index: usize, count: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("graph has no valid (anchor, non-neighbor, neighbor) triplet")]
    Unsampleable,

    #[error("triplet enumeration limited to {limit} nodes, graph has {n}")]
    TooLargeToEnumerate { n: usize, limit: usize },

    #[error("empty triplet set{0}")]
    EmptyTriplets(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite metric entry after iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("k = {k} must be smaller than the node count {n}")]
    InvalidK { k: usize, n: usize },

    #[error("{0}")]
    Degenerate(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SpmlError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SpmlError::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        SpmlError::Parse { path: path.into(), line, msg: msg.into() }
    }
}

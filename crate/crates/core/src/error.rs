use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node id {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("feature dimension {dim} out of range for {d} feature columns")]
    DimOutOfRange { dim: usize, d: usize },

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("label {label} of node {node} is not below the class count {classes}")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        classes: usize,
    },

    #[error("node {node} appears in more than one split")]
    OverlappingSplits { node: usize },

    #[error("node set is empty")]
    EmptyNodeSet,

    #[error("feature dimension set is empty")]
    EmptyDimSet,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("no labeled nodes to train on")]
    EmptyLabeledSet,

    #[error("node {node} has no label")]
    MissingLabel { node: usize },

    #[error(
        "model {model_index}: sampled subspace covers fewer than two training classes after {attempts} draws"
    )]
    DegenerateSubspace { model_index: usize, attempts: u32 },

    #[error("base model {index} failed: {source}")]
    BaseModel {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("all voting accuracies are zero")]
    ZeroAccuracies,

    #[error("unknown cost model `{0}`")]
    UnknownCostModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("model serialization: {0}")]
    Serialization(String),

    #[error("victim oracle failed: {0}")]
    Oracle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

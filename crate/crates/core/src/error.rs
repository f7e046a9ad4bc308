use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: cannot parse cell {cell:?} at row {row}, column {column}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        cell: String,
    },

    #[error("{path}: row {row} has {found} columns, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row count mismatch: {first} has {first_rows} rows but {other} has {other_rows}")]
    RowCountMismatch {
        first: String,
        first_rows: usize,
        other: String,
        other_rows: usize,
    },

    #[error("expected {expected} labels, found {found}")]
    LabelCount { expected: usize, found: usize },

    #[error("non-finite value in view {view} at sample {sample}, feature {feature}")]
    NonFiniteInput {
        view: usize,
        sample: usize,
        feature: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    Asymmetric { deviation: f64 },

    #[error("reconstruction weights for sample {sample} are not finite")]
    DegenerateNeighborhood { sample: usize },

    #[error("row {row} has zero degree; normalized Laplacian is undefined")]
    ZeroDegree { row: usize },

    #[error("objective became non-finite at sweep {sweep}")]
    NonFiniteObjective { sweep: usize },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}

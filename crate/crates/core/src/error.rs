use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FcmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FcmError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error at line {line}: {message}")]
    Csv { line: u64, message: String },
    /// Row and column are 1-based, as a spreadsheet would show them.
    #[error("line {line}, column {column}: cannot parse {cell:?} as a finite number")]
    Parse {
        line: u64,
        column: usize,
        cell: String,
    },
    #[error("line {line}: expected {expected} columns, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("empty dataset: {0}")]
    Empty(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// A cluster lost all of its (powered) membership mass, or its weighted
    /// image `X g_j` vanished where a square root of it is required.
    #[error("cluster {cluster} is degenerate: {reason}")]
    DegenerateCluster {
        cluster: usize,
        reason: &'static str,
    },
}

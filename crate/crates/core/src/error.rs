use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("input is empty")]
    Empty,

    #[error("ragged row at line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric field {field:?} at line {line}, column {column}")]
    NonNumeric {
        line: usize,
        column: usize,
        field: String,
    },

    #[error("non-finite value at line {line}, column {column}")]
    NonFinite { line: usize, column: usize },

    #[error("record {index} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        index: usize,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("index ({i}, {j}) out of range for {n} points")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("simplex budget exceeded: {required} simplices required, {allowed} allowed")]
    BudgetExceeded { required: usize, allowed: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("missing configuration key `{0}`")]
    MissingKey(String),

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),
}

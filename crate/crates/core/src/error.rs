use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("target column `{0}` not found")]
    MissingTarget(String),
    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no data rows")]
    EmptyDataset,
    #[error("missing value in column `{column}` at row {row}")]
    MissingValue { column: String, row: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("class {class} has {count} rows, fewer than the {k} folds requested")]
    ClassTooSmall { class: usize, count: usize, k: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("genome layout does not match the generator configuration")]
    LayoutMismatch,
}

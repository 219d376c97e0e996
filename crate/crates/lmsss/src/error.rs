//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset handling, configuration validation and the
/// evolutionary pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv parse error: {0}")]
    Csv(#[from] csv::Error),

    /// A cell-level problem in a tabular file, located by 1-based row and
    /// 0-based column.
    #[error("row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn cell(row: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Cell {
            row,
            column,
            message: message.into(),
        }
    }
}

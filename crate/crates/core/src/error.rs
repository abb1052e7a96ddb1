use std::io;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("unknown level {label:?} in multiplier table for {table}")]
    UnknownLevel { table: String, label: String },

    #[error("parse error at line {line}, column {column:?}: {message}")]
    Parse {
        line: usize,
        column: String,
        message: String,
    },

    #[error("unexpected header {found:?}; expected columns {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch} (seed {seed})")]
    Diverged { seed: u64, epoch: usize },

    #[error("all {0} training replications diverged")]
    AllDiverged(usize),

    #[error("model matrix is rank deficient; collinear terms: {}", .terms.join(", "))]
    RankDeficient { terms: Vec<String> },

    #[error("level {value} for factor {factor} is outside [0, 1]")]
    LevelOutOfRange { factor: char, value: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidValue(msg.into())
}

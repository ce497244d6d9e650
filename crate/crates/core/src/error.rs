use std::io;

use thiserror::Error;

use crate::systems::SystemError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid cell counts: {0}")]
    InvalidCounts(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("cell is out of domain")]
    OutOfDomain,

    #[error("cell index {index} out of range (n_x = {n_x})")]
    CellOutOfRange { index: usize, n_x: usize },

    #[error("input index {index} out of range (n_u = {n_u})")]
    InputOutOfRange { index: usize, n_u: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("system evaluation failed at cell {cell}, input {input}, sample {sample}: {source}")]
    System {
        cell: usize,
        input: usize,
        sample: usize,
        #[source]
        source: SystemError,
    },

    #[error("corrupted abstraction: {0}")]
    Corrupt(String),

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("unsupported file header {found:?}, expected {expected:?}")]
    VersionMismatch { expected: String, found: String },

    #[error("file is truncated: {0}")]
    Truncated(String),

    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: String, computed: String },

    #[error("winning set is empty")]
    EmptyWinningSet,

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

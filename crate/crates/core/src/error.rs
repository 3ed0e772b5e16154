use thiserror::Error;

/// Errors produced by ingestion, fitting, and estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("domain error on line {line}: {message}")]
    Domain { line: u64, message: String },

    #[error("duplicate record for drive '{drive_id}', segment {segment_id} on line {line}")]
    Duplicate {
        drive_id: String,
        segment_id: u32,
        line: u64,
    },

    #[error("empty result: {0}")]
    EmptyResult(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

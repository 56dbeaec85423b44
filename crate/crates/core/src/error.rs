use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} entries, got {actual}")]
    Size { expected: usize, actual: usize },

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("field is not Hermitian-symmetric (imaginary residue {residue:e})")]
    Symmetry { residue: f64 },

    #[error("field is not mean-zero (mean coefficient magnitude {mean:e})")]
    MeanZero { mean: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical blowup at step {step}")]
    Blowup {
        step: usize,
        last_checkpoint: Option<PathBuf>,
    },

    #[error("config error on line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Flag { key: String, message: String },

    #[error("corrupt field file: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}

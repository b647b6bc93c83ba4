use std::io;

use thiserror::Error;

/// Errors produced by the tensor, model, flow and costing layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("channel mismatch: expected {expected}, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("{what} of {value} is not divisible by {factor}")]
    Divisibility {
        what: &'static str,
        value: usize,
        factor: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("malformed model name {0:?}")]
    InvalidName(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pyramid collapses: depth {depth} needs more than block width {block}")]
    PyramidCollapse { depth: usize, block: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("decode failure: {0}")]
    Decode(String),

    #[error("encode failure: {0}")]
    Encode(String),

    #[error("unsupported image: {0}")]
    Unsupported(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("expected {expected} channel(s), got {actual}")]
    ChannelCount { expected: usize, actual: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "{width}x{height} is not divisible by {divisor}; valid choices for this image: {valid:?}"
    )]
    NotDivisible {
        width: usize,
        height: usize,
        divisor: usize,
        valid: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("weights not found: {0}")]
    WeightsNotFound(PathBuf),

    #[error("bad weight file: {0}")]
    BadWeights(String),

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("non-finite parameter in layer {layer}")]
    NonFiniteParameter { layer: usize },

    #[error("dimension overflow upscaling {width}x{height} by {factor}")]
    DimensionOverflow {
        width: usize,
        height: usize,
        factor: usize,
    },

    #[error("patch index {index} out of range ({len} patches)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

/// Common divisors of `width` and `height` that are at least `min`.
pub(crate) fn common_divisors(width: usize, height: usize, min: usize) -> Vec<usize> {
    (min.max(1)..=width.min(height))
        .filter(|&d| width.is_multiple_of(d) && height.is_multiple_of(d))
        .collect()
}

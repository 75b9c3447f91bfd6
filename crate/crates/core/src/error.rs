//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value (bad interval, unknown archetype, ...).
    #[error("configuration error: {0}")]
    Config(String),

    /// Tensor or layer shape mismatch.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A frame contained no valid target pixels.
    #[error("empty target: {0}")]
    EmptyTarget(String),

    /// Scene geometry unusable for rendering (e.g. vertices behind the camera).
    #[error("render error: {0}")]
    Render(String),

    /// Placement or generation retries exhausted.
    #[error("retry limit exhausted: {0}")]
    RetryExhausted(String),

    /// Malformed or unsupported on-disk data.
    #[error("data format error: {0}")]
    Format(String),

    /// NaN/Inf encountered where finite values are required.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}

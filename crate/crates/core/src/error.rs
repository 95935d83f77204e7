use thiserror::Error;

/// Errors produced by instance generation, evaluation, and the harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// Procedural generation could not produce a valid object (for example
    /// no ergodic matrix within the retry budget). Usually a sign of
    /// pathological parameters.
    #[error("generation failed: {0}")]
    Generation(String),

    /// An instance file is malformed or violates an instance invariant.
    #[error("invalid instance file: {0}")]
    InvalidInstance(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("config not found: {0}")]
    ConfigNotFound(PathBuf),

    #[error("embedding transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },

    #[error("embedding protocol error: {0}")]
    Protocol(String),

    /// Burgers field went non-finite or violated the CFL guard.
    #[error("solver blowup at substep {substep}: {reason}")]
    SolverBlowup { substep: usize, reason: String },

    #[error("trace lookup failed: no record for step {step}, xi {xi}")]
    TraceLookup { step: usize, xi: f64 },

    #[error("non-finite network output: {0}")]
    NonFinite(String),

    #[error("NaN loss in minibatch {minibatch} (epoch {epoch})")]
    NanLoss { epoch: usize, minibatch: usize },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

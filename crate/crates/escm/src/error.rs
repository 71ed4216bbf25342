//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used by every fallible operation in the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the data pipeline, the solvers, and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed file content: bad header, unparsable number, wrong
    /// field. The message names the offending key or line.
    #[error("format error: {0}")]
    Format(String),

    /// Matrix or vector dimensions do not match what the operation
    /// requires.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Labels are missing, out of range, or of the wrong length.
    #[error("label error: {0}")]
    Label(String),

    /// A trajectory does not contain enough frames to form a single
    /// snapshot.
    #[error("insufficient frames: have {frames}, need at least {needed}")]
    InsufficientFrames { frames: usize, needed: usize },

    /// Input data is degenerate for the requested operation, e.g. an
    /// all-zero snapshot handed to the PCA projection.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Requested window length exceeds the number of snapshots.
    #[error("window length {window} exceeds sequence length {steps}")]
    WindowTooLong { window: usize, steps: usize },

    /// A raw buffer or matrix has the wrong shape for the model.
    #[error("shape error: {0}")]
    Shape(String),

    /// Training left the stable regime: the loss became non-finite or
    /// exceeded the divergence threshold.
    #[error("divergence at epoch {epoch}, window {window}: loss = {loss}")]
    Divergence {
        epoch: usize,
        window: usize,
        loss: f64,
    },

    /// An argument matrix violates a required property (symmetry,
    /// non-negativity, zero diagonal, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A scalar parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A configuration is inconsistent or incomplete. The message names
    /// the offending key.
    #[error("config error: {0}")]
    Config(String),

    /// The evaluation protocol cannot run on the given data, e.g.
    /// ground-truth labels are absent.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Command-line usage error: unknown flag, missing argument,
    /// unparsable value.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code the CLI maps this error to. Usage and configuration
    /// problems exit with 2, numerical divergence with 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Divergence { .. } => 3,
            _ => 2,
        }
    }
}

use thiserror::Error;

use crate::convex_kit::ConicStatus;
use crate::optimizer::LiftedSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// The Fisher information of the warden angle vanished.
    #[error("warden angle is unidentifiable (Fisher term {0:e})")]
    Unidentifiable(f64),

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("config value for `{key}` out of range: {msg}")]
    ConfigRange { key: String, msg: String },

    #[error("conic solve ended with status {status:?} ({context})")]
    Solver { status: ConicStatus, context: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no convergence: {reason}")]
    NonConvergence {
        reason: String,
        best: Box<LiftedSolution>,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("plotting failed: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}

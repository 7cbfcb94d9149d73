use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive density {rho}")]
    NonPositiveDensity { rho: f64 },

    #[error("non-positive thermal pressure {p}")]
    NonPositivePressure { p: f64 },

    #[error("time step must be positive (got {dt})")]
    ZeroTimeStep { dt: f64 },

    #[error("cleaning speed c_h must be positive (got {ch})")]
    NonPositiveCh { ch: f64 },

    #[error("Riemann solver failure at {location}: {reason}")]
    SolverFailure { location: String, reason: String },

    #[error("grid has no cells")]
    EmptyGrid,

    #[error("node ({level}, {i}, {j}) is missing a child")]
    MissingChild { level: u8, i: i64, j: i64 },

    #[error("prediction stencil incomplete around ({level}, {i}, {j})")]
    IncompleteStencil { level: u8, i: i64, j: i64 },

    #[error("level {level} outside [0, {max}]")]
    LevelOutOfRange { level: u8, max: u8 },

    #[error("cannot refine beyond the maximum level {max}")]
    MaxLevelReached { max: u8 },

    #[error("compression history is empty")]
    EmptyHistory,

    #[error("incompatible domains: {0}")]
    IncompatibleDomains(String),

    #[error("initial condition requires domain [-1,1]^2: {0}")]
    DomainMismatch(String),

    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn solver(location: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::SolverFailure {
            location: location.into(),
            reason: reason.into(),
        }
    }

    /// Attach a cell location to a solver failure raised deeper in the stack.
    pub(crate) fn at(self, location: impl std::fmt::Display) -> Self {
        match self {
            Error::SolverFailure { location: l, reason } => Error::SolverFailure {
                location: format!("{location} ({l})"),
                reason,
            },
            other => Error::SolverFailure {
                location: location.to_string(),
                reason: other.to_string(),
            },
        }
    }
}

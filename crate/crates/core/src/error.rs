use thiserror::Error;

use crate::dbm::DbmError;
use crate::model::ModelError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("WCET may be unbounded: no finite delay bound at location {location}")]
    WcetUnbounded { location: String },
    #[error("cycle {} never decays (sigma = {sigma}); it cannot be left with positive probability", cycle.join(" -> "))]
    NonConvergingCycle { cycle: Vec<String>, sigma: f64 },
    #[error("cycle {} has no exit edge at {location}", cycle.join(" -> "))]
    NoExitEdge { cycle: Vec<String>, location: String },
    #[error("model has no initial location")]
    NoInitialLocation,
    #[error("exploration exceeded the budget of {0} states")]
    StateBudgetExceeded(usize),
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Zone(#[from] DbmError),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

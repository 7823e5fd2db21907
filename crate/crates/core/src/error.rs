use thiserror::Error;

use crate::model::{ActionId, ObsId, Violation};
use crate::trajectory::History;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid parameters: {0}")]
    Param(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeliefError {
    #[error("observation {obs} has zero likelihood after action {action}")]
    ZeroLikelihood { action: ActionId, obs: ObsId },
    #[error("belief is already at the last time step {0}")]
    PastHorizon(usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exact expansion needs up to {branches} nodes, limit is {limit}")]
    TooLarge { branches: f64, limit: f64 },
    #[error("policy has no branch for reachable history {0:?}")]
    IncompletePolicy(History),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("retained trajectory set is not prefix-closed (trajectory {0:#018x} lacks its prefix)")]
    PrefixViolation(u64),
    #[error("retained trajectory {0:#018x} does not follow the policy")]
    PolicyMismatch(u64),
    #[error("history view at time {time} holds {count} actions, expected at most one")]
    NotAPolicy { time: usize, count: usize },
    #[error("invalid bound configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("belief at time {time} is past the model horizon {horizon}")]
    PastHorizon { time: usize, horizon: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("certification failed: {reason}\n{trace}")]
pub struct CertificationFailure {
    pub reason: String,
    pub trace: String,
}

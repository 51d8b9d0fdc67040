use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration has no popularity levels")]
    EmptyLevels,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("operation requires setup `{expected}`, found `{found}`")]
    WrongSetup {
        expected: &'static str,
        found: &'static str,
    },

    #[error("regularity conditions violated ({} violation(s)): {}", .0.len(), .0.first().map(|v| v.message.as_str()).unwrap_or(""))]
    Regularity(Vec<Violation>),

    #[error("no M-feasible partition found for M = {memory}")]
    Infeasible { memory: String },

    #[error("level {level} matches no class of the refined single-user partition at M = {memory}")]
    Uncovered { level: usize, memory: String },

    #[error("invalid bound parameters: {0}")]
    InvalidParams(String),

    #[error("parameter recipe not applicable: {0}")]
    NotApplicable(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

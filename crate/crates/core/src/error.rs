use std::path::PathBuf;

use crate::hilbert::SpaceDescriptor;

/// Errors surfaced by the solver library and harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("space mismatch: {left} vs {right}")]
    SpaceMismatch {
        left: SpaceDescriptor,
        right: SpaceDescriptor,
    },
    #[error("non-finite value in {context}")]
    NonFinite { context: String },
    #[error("empty feasible set: {0}")]
    EmptySet(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("{algorithm} requires {what}")]
    MissingComponent {
        algorithm: &'static str,
        what: &'static str,
    },
    #[error("line search exceeded {max_backtracks} backtracking steps; check the operator and feasible set")]
    ArmijoCapExceeded { max_backtracks: usize },
    #[error("step `{step}` produced a non-finite value at iteration {k}")]
    StepNonFinite { step: &'static str, k: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("csv parse error at line {line}: {reason}")]
    CsvParse { line: usize, reason: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}

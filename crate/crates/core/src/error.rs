use std::path::PathBuf;

use thiserror::Error;

use crate::hierarchy::NodeId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("prefix-positivity violated at time {time}: point {point:?} has multiplicity {multiplicity}")]
    NegativeMultiplicity {
        time: u64,
        point: Vec<f64>,
        multiplicity: i64,
    },

    #[error("batch times must be strictly increasing (got {next} after {prev})")]
    NonIncreasingTime { prev: u64, next: u64 },

    #[error("expected a batch for time {expected}, got time {got}")]
    TimeDiscontinuity { expected: u64, got: u64 },

    #[error("node {node:?} exceeds the tree's maximum depth {max_depth}")]
    DepthExceeded { node: NodeId, max_depth: u32 },

    #[error("support is not an antichain: {ancestor:?} is an ancestor of {descendant:?}")]
    NotAntichain { ancestor: NodeId, descendant: NodeId },

    #[error("binary-tree counter horizon {horizon} exhausted")]
    HorizonExhausted { horizon: u64 },

    #[error("selector returned counter index {index}, but only {count} counters exist")]
    SelectorOutOfRange { index: usize, count: usize },

    #[error("length mismatch: expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("relative error undefined: query {query} has zero true count and the snapshot is empty")]
    DegenerateEvaluation { query: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 1 for configuration and I/O problems,
    /// 2 for input data that fails validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::OutOfDomain { .. }
            | Error::NegativeMultiplicity { .. }
            | Error::NonIncreasingTime { .. }
            | Error::Parse { .. } => 2,
            _ => 1,
        }
    }
}

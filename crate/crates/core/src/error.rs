use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the engine. Each variant maps onto one of the
/// conventional CLI exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for graph with {node_count} nodes")]
    NodeOutOfRange { index: usize, node_count: usize },

    #[error("invalid weight {weight} on ({source_node}, {target})")]
    InvalidWeight {
        source_node: usize,
        target: usize,
        weight: f64,
    },

    #[error("duplicate edge ({source_node}, {target})")]
    DuplicateEdge { source_node: usize, target: usize },

    #[error("hyperedge {0} has no members")]
    EmptyHyperedge(usize),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("graph is not strongly connected")]
    NotStronglyConnected,

    #[error("weight matrix is not row-stochastic (row {row} sums to {sum})")]
    NotRowStochastic { row: usize, sum: f64 },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("similarity {0} outside [0, 1]")]
    OutOfRangeSimilarity(f64),

    #[error("node {0} has zero weighted degree")]
    ZeroDegree(usize),

    #[error("diffusion kernel row {row} sums to {sum}, expected 1")]
    KernelNotNormalized { row: usize, sum: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("non-finite state encountered after t = {last_finite_time}")]
    NonFiniteState { last_finite_time: f64 },

    #[error("step limit of {max_steps} exceeded at t = {time}")]
    StepLimitExceeded { max_steps: usize, time: f64 },

    #[error("step size underflow at t = {time}")]
    StepSizeUnderflow { time: f64 },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("problem too large: {size} exceeds limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("operator is not symmetric positive semidefinite (eigenvalue {0})")]
    NotSpd(f64),

    #[error("mask `{0}` is empty")]
    EmptyMask(String),

    #[error("{path}: line {line}: {message}")]
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

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// 2 for bad input, 3 for numerical failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFiniteState { .. }
            | Error::StepLimitExceeded { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::NoConvergence(_)
            | Error::NotSpd(_)
            | Error::OutOfRangeSimilarity(_)
            | Error::KernelNotNormalized { .. }
            | Error::ZeroDegree(_) => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

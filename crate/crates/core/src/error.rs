//! Crate-wide error type.

use std::collections::BTreeSet;

/// Errors produced by budget validation, dataset construction, training,
/// unlearning bookkeeping, audits, and experiment I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A numeric or structural argument is outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A capacity query mixes incompatible regime and budget (e.g. δ > 0
    /// under a pure-DP regime).
    #[error("capacity regime mismatch: {0}")]
    RegimeMismatch(String),

    /// An operation that needs at least one data point received none.
    #[error("dataset is empty")]
    EmptyDataset,

    /// Vector or dataset dimensions disagree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A dataset violates a structural requirement (e.g. points must lie on
    /// the scaled hypercube for a reduction to apply).
    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    /// A distribution parameter collapses the quantity being estimated
    /// (e.g. zero-mean product distribution in an excess-risk query).
    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    /// The union of deletion requests would exceed the certified capacity.
    #[error(
        "deletion capacity exceeded: certificate covers {capacity} deletions, \
         request would bring the total to {requested}"
    )]
    CapacityExceeded { capacity: usize, requested: usize },

    /// Chained deletion requests are not pairwise disjoint.
    #[error("overlapping deletion requests: index {0} appears in more than one request")]
    OverlappingRequests(usize),

    /// A deletion request referenced an index outside the dataset.
    #[error("index {index} out of range for dataset of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    /// An estimator received too few samples to say anything.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The audited mechanism itself failed while being sampled.
    #[error("mechanism failed at trial {trial}: {source}")]
    Mechanism {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// File contents (CSV/JSON/TOML) could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl Error {
    /// Convenience constructor used by deletion bookkeeping.
    pub(crate) fn capacity(capacity: usize, requested: usize) -> Self {
        Error::CapacityExceeded {
            capacity,
            requested,
        }
    }

    /// First index shared by two request sets, as an overlap error.
    pub(crate) fn overlap(shared: &BTreeSet<usize>) -> Self {
        Error::OverlappingRequests(shared.iter().next().copied().unwrap_or(0))
    }
}

use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid observation {0}: observations must be finite and nonnegative")]
    InvalidObservation(f64),

    #[error("insufficient data: need at least {needed} observations, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("Gini index is undefined for a sample with zero mean")]
    UndefinedGini,

    #[error("probability {0} is outside the open interval (0, 1)")]
    Domain(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("source exhausted after {n} observations; stopping threshold {threshold} not reached")]
    SourceExhausted { n: usize, threshold: f64 },

    #[error("no stop after {n_max} observations (hard cap)")]
    CapExceeded { n_max: usize },

    #[error("line {line}: cannot parse {token:?} as a number")]
    Parse { line: usize, token: String },

    #[error("line {line}: negative value {value}")]
    NegativeValue { line: usize, value: f64 },

    #[error("moment condition fails: {0}")]
    MomentExistence(String),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

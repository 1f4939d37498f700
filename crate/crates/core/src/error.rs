use std::path::PathBuf;

use crate::search_space::Interval;

/// Errors produced anywhere in the search pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("gene {position} = {value} lies outside its valid interval {interval}")]
    InvalidGene {
        position: usize,
        value: f64,
        interval: Interval,
    },
    #[error("vector length {actual} does not match the expected length {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid genotype: {0}")]
    InvalidGenotype(String),
    #[error("search space holds {count} genotypes, above the enumeration cap of {cap}")]
    SpaceTooLarge { count: u128, cap: u128 },
    #[error("population size {0} is odd")]
    OddPopulation(usize),
    #[error("non-finite loss {0}")]
    NonFiniteLoss(f64),
    #[error("unknown weight key {0}")]
    UnknownKey(String),
    #[error("no registered shape for weight key {0}")]
    MissingShape(String),
    #[error("shape mismatch for {key}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        key: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("genotypes use different blocks-per-cell ({0} vs {1})")]
    SchemeMismatch(usize, usize),
    #[error("evaluation of individual {id} failed: {source}")]
    Evaluation {
        id: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("no tabulated loss for genotype {0}")]
    MissingTableEntry(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint config hash {found} does not match the supplied config {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

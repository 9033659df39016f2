use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty evaluation set")]
    EmptyEvaluationSet,

    #[error("non-finite attribution")]
    NonFiniteAttribution,

    #[error("non-finite feature value in sample {0}")]
    NonFiniteFeature(u64),

    #[error("negative attribution value {0}")]
    NegativeAttribution(f64),

    #[error("tabular model: expected flat features, got {0}")]
    TabularModel(String),

    #[error("inconsistent label: sample {sample_id} has label {label} but the model predicts {predicted}")]
    InconsistentLabel { sample_id: u64, label: usize, predicted: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("map too small for partial scheme (need at least 5 features, got {0})")]
    MapTooSmall(usize),

    #[error("undefined centroid: attribution map sums to zero")]
    UndefinedCentroid,

    #[error("attributed support would be empty after removing {removed} of {support} features")]
    EmptySupport { removed: usize, support: usize },

    #[error("invalid probabilities from model: {0}")]
    InvalidProbabilities(String),

    #[error(transparent)]
    Bridge(#[from] BridgeError),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error("config error: {0}")]
    Config(String),

    #[error("nothing to run: the config selects no metrics")]
    NothingToRun,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("worker pool: {0}")]
    Pool(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

/// Failures of the external model process.
#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("failed to launch model process `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("model process did not answer request {id} within {timeout:?}")]
    Timeout { id: u64, timeout: Duration },

    #[error("malformed response line: {0}")]
    Malformed(String),

    #[error("response id {got} does not match any pending request")]
    IdMismatch { got: u64 },

    #[error("response {id} carries {got} probability rows, expected {expected}")]
    RowCount { id: u64, got: usize, expected: usize },

    #[error("response {id} row {row} is not a probability vector (sum {sum})")]
    NotNormalized { id: u64, row: usize, sum: f64 },

    #[error("model process exited (restarted already: {restarted})")]
    Crashed { restarted: bool },

    #[error("model process i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Failures decoding the binary container or JSON fixtures.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected SOCO, found {0:?}")]
    BadMagic([u8; 4]),

    #[error("version mismatch: file has version {found}, reader supports {supported}")]
    VersionMismatch { found: u16, supported: u16 },

    #[error("truncated payload: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },

    #[error("unexpected container kind {0}")]
    WrongKind(u8),

    #[error("unknown dtype tag {0}")]
    UnknownDtype(u8),

    #[error("unsupported shape rank {0}")]
    BadRank(u8),

    #[error("maps do not belong to this dataset: {0}")]
    Misaligned(String),

    #[error("json: {0}")]
    Json(String),
}

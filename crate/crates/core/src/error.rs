use std::path::PathBuf;

use thiserror::Error;

/// Every failure the engine reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("retain probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("layer {0} is not a valid target for this operator")]
    InvalidLayer(usize),
    #[error("operation would leave layer {0} without units")]
    WouldEmptyLayer(usize),
    #[error("no hidden unit can be killed")]
    NoKillableUnit,
    #[error("incompatible channels: {0}")]
    IncompatibleChannels(String),
    #[error("invalid layer position {0}")]
    InvalidPosition(usize),
    #[error("operator not applicable: {0}")]
    NotApplicable(String),

    #[error("population member {0} has no fitness")]
    UnevaluatedMember(u64),
    #[error("population is not over capacity")]
    NothingToRemove,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("bad IDX magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { expected: u32, found: u32 },
    #[error("IDX file is truncated: {0}")]
    TruncatedFile(String),
    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("genome document violates schema: {0}")]
    SchemaViolation(String),
    #[error("unsupported genome format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u64 },

    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::InvalidShape(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

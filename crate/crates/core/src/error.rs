use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty training set")]
    EmptyTrainingSet,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no protected attribute declared")]
    NoProtectedAttribute,

    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    #[error("unknown group `{0}`")]
    UnknownGroup(String),

    #[error("metric {metric} is undefined for group `{group}`")]
    UndefinedMetric { metric: String, group: String },

    #[error("need at least two groups with a defined {0}")]
    TooFewGroups(String),

    #[error("insufficient per-group data: no category has at least {0} rows")]
    InsufficientGroupData(usize),

    #[error("single-category attribute: `{0}` is the only category with support")]
    SingleCategory(String),

    #[error("zero expected count for group index {0}")]
    ZeroExpectedCount(usize),

    #[error("ledger schema version {found} is not supported (expected {expected}); migrate the ledger explicitly")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("invalid ledger: {0}")]
    InvalidLedger(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

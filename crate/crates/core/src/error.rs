use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Row numbers are 1-based data-row indices (the header is not counted).
#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("column `{0}` appears more than once in header")]
    DuplicateColumn(String),
    #[error("invalid column mapping: {0}")]
    InvalidMapping(String),
    #[error("row {row}, column `{column}`: cannot parse value `{value}`")]
    UnparsableValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: negative time {time}")]
    NegativeTime { row: usize, time: f64 },
    #[error("row {row}: malformed csv record: {message}")]
    MalformedRecord { row: usize, message: String },
    #[error("dataset contains no records")]
    EmptyDataset,
    #[error("feature name `{0}` collides with a reserved output column")]
    ReservedColumnName(String),
    #[error("index {index} out of range for dataset of {len} records")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("index {0} selected more than once")]
    DuplicateIndex(usize),

    #[error("gamma shape must be positive and finite, got {0}")]
    NonPositiveShape(f64),
    #[error("invalid dirichlet parameters: {0}")]
    InvalidDirichlet(String),
    #[error("dirichlet draw degenerated {0} consecutive times")]
    DegenerateDraw(usize),

    #[error("invalid split configuration: {0}")]
    InvalidConfig(String),
    #[error("all observed times are equal; the timeline cannot be binned")]
    DegenerateTimeline,
    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),
    #[error("assignment covers {assignment} samples but dataset has {dataset}")]
    LengthMismatch { assignment: usize, dataset: usize },
    #[error("sample {index} assigned to client {client}, but only {k} clients exist")]
    ClientOutOfRange {
        index: usize,
        client: usize,
        k: usize,
    },

    #[error("dataset has no observed events")]
    NoEvents,
    #[error("chi-square statistic must be non-negative, got {0}")]
    NegativeInput(f64),
    #[error("heterogeneity needs at least 2 clients, got {0}")]
    TooFewClients(usize),
    #[error("sweep needs at least one run")]
    NoRuns,

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

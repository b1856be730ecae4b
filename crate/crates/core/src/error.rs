use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("file {0} is empty")]
    EmptyFile(PathBuf),

    #[error("label column {0:?} not found")]
    MissingLabelColumn(String),

    #[error("more than two classes: found labels {0:?}")]
    TooManyClasses(Vec<String>),

    #[error("need two classes, found only {0:?}")]
    SingleClass(Vec<String>),

    #[error("positive label {0:?} not present in data")]
    UnknownPositiveLabel(String),

    #[error("parse error at row {row}, column {column}: {detail}")]
    Parse {
        row: usize,
        column: String,
        detail: String,
    },

    #[error("line {line}: indices not ascending ({prev} then {next})")]
    IndicesNotAscending { line: usize, prev: usize, next: usize },

    #[error("line {line}: unparseable label {label:?}")]
    BadLabel { line: usize, label: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class {label} has {count} members, fewer than k = {k}")]
    ClassTooSmall { label: i8, count: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonpositive Hessian diagonal {value} at coordinate {index}")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("non-finite arithmetic in solver at iteration {0}")]
    NonFinite(usize),

    #[error("Friedman F statistic undefined: denominator {0} <= 0")]
    FriedmanDenominator(f64),

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("malformed protocol file: {0}")]
    Protocol(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-parseable category used by the command line front end.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::EmptyFile(_) => "empty-file",
            Error::MissingLabelColumn(_) => "missing-label-column",
            Error::TooManyClasses(_) | Error::SingleClass(_) | Error::UnknownPositiveLabel(_) => {
                "labels"
            }
            Error::Parse { .. } | Error::IndicesNotAscending { .. } | Error::BadLabel { .. } => {
                "parse"
            }
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::InvalidDataset(_) => "invalid-dataset",
            Error::ClassTooSmall { .. } => "class-too-small",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::NonPositiveDiagonal { .. } | Error::NonFinite(_) => "solver",
            Error::FriedmanDenominator(_) => "statistics",
            Error::ModelFormat(_) => "model-format",
            Error::Protocol(_) => "protocol",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

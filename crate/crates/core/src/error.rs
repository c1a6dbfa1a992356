use std::path::PathBuf;

use thiserror::Error;

use crate::teacher::TeacherError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("line {line}: {message}")]
    Line { line: usize, message: String },

    #[error("corpus file is empty")]
    EmptyCorpus,

    #[error("bad magic bytes: expected {expected:?}")]
    BadMagic { expected: &'static str },

    #[error("unsupported format version {found} (expected {expected})")]
    BadVersion { found: u16, expected: u16 },

    #[error("truncated payload")]
    Truncated,

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("zero vector in row {row}")]
    ZeroRow { row: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unknown item id {0}")]
    UnknownItem(usize),

    #[error("record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },

    #[error("{found} in-band pairs available, {requested} requested")]
    InsufficientPairs { found: usize, requested: usize },

    #[error("single-class dataset: both positive and negative labels are required")]
    SingleClass,

    #[error("missing gold label for item {0}")]
    MissingLabel(usize),

    #[error(transparent)]
    Teacher(#[from] TeacherError),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: String,
        completed: Vec<PathBuf>,
        #[source]
        source: Box<Error>,
    },

    #[error("{}", missing_message(.missing))]
    IncompleteRun { missing: Vec<String> },

    #[error("run directory is locked: {0}")]
    Locked(PathBuf),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn missing_message(missing: &[String]) -> String {
    missing
        .iter()
        .map(|s| format!("stage missing: {s}"))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit code for the command-line front end: 1 validation,
    /// 2 teacher/transport, 3 incomplete run.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Teacher(_) => 2,
            Error::IncompleteRun { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 1,
        }
    }
}

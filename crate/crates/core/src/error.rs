use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("score undefined: {0}")]
    UndefinedScore(String),

    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("column `{0}` has no internal tokens")]
    NoInternalTokens(String),

    #[error("`{0}` is a primary-key token; primary-key co-occurrences are not stored, use the model report instead")]
    PrimaryKeyToken(String),

    #[error("`{0}` is an empty (NULL) token and has no co-occurrences")]
    EmptyToken(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("incompatible sketches: {0}")]
    Merge(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("unsupported file version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, printed by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "E_CONFIG",
            Error::Schema(_) => "E_SCHEMA",
            Error::Ingestion { .. } => "E_INGEST",
            Error::UndefinedScore(_) => "E_UNDEFINED_SCORE",
            Error::UnknownToken(_) => "E_UNKNOWN_TOKEN",
            Error::UnknownColumn(_) => "E_UNKNOWN_COLUMN",
            Error::NoInternalTokens(_) => "E_NO_INTERNAL_TOKENS",
            Error::PrimaryKeyToken(_) => "E_PRIMARY_KEY_TOKEN",
            Error::EmptyToken(_) => "E_EMPTY_TOKEN",
            Error::NoData(_) => "E_NO_DATA",
            Error::Merge(_) => "E_MERGE",
            Error::Corrupt(_) => "E_CORRUPT",
            Error::UnsupportedVersion { .. } => "E_VERSION",
            Error::Capacity(_) => "E_CAPACITY",
            Error::File { .. } | Error::Io(_) => "E_IO",
            Error::Csv(_) => "E_CSV",
            Error::Json(_) => "E_JSON",
        }
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::InvalidConfig(_) => 2,
            Error::Schema(_) | Error::Ingestion { .. } | Error::Csv(_) => 3,
            Error::File { .. } | Error::Io(_) => 4,
            Error::Corrupt(_) | Error::UnsupportedVersion { .. } | Error::Json(_) => 5,
            Error::UnknownToken(_)
            | Error::UnknownColumn(_)
            | Error::PrimaryKeyToken(_)
            | Error::EmptyToken(_) => 6,
            Error::Capacity(_) => 7,
            _ => 1,
        }
    }

    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}

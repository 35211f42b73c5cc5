use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants that originate from a file carry its path and, where it makes
/// sense, a line number or byte offset.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate embedding: {0}")]
    DegenerateEmbedding(String),

    #[error("dimension mismatch ({context}): expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("difficulty needs at least one system")]
    EmptySystemSet,

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("{}: expected {expected} segments, found {found}", path.display())]
    Alignment {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("{0}")]
    Config(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: at byte {offset}: {message}", path.display())]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Coverage { path: PathBuf, message: String },

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("insufficient systems: {0}")]
    InsufficientSystems(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable code, used as the `ERROR <code>:` prefix by the CLI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DegenerateEmbedding(_) => "DegenerateEmbedding",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::EmptySystemSet => "EmptySystemSet",
            Error::EmptyCorpus(_) => "EmptyCorpus",
            Error::Alignment { .. } => "AlignmentError",
            Error::Config(_) => "ConfigError",
            Error::Parse { .. } => "ParseError",
            Error::Format { .. } => "FormatError",
            Error::Coverage { .. } => "CoverageError",
            Error::UndefinedCorrelation(_) => "UndefinedCorrelation",
            Error::InsufficientSystems(_) => "InsufficientSystems",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

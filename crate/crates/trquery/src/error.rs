use std::io;
use std::path::PathBuf;

use thiserror::Error;
use trquery_core::embedding::EmbeddingError;
use trquery_core::evalkit::EvalError;
use trquery_core::ntriples::NtError;
use trquery_core::qparser::PlanError;
use trquery_core::recommender::RecommendError;
use trquery_core::sparql::SparqlError;

/// A malformed binary file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("not a {expected} file (bad magic bytes)")]
    BadMagic { expected: String },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("file is truncated")]
    Truncated,
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    NTriples { path: PathBuf, source: NtError },
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Recommend(#[from] RecommendError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{}:{line}: {message}", path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("write failed: {0}")]
    Output(#[from] io::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, source: FormatError) -> Self {
        Error::Format {
            path: path.into(),
            source,
        }
    }
}

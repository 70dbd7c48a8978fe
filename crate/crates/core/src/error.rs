use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("keyword list empty")]
    EmptyKeywordList,

    #[error(
        "{malformed} of {total} lines in {source_name} are malformed; input is probably not tweet JSONL"
    )]
    MostlyMalformed {
        source_name: String,
        malformed: usize,
        total: usize,
    },

    #[error("vocabulary is empty after applying min_count {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("corpus has {tokens} in-vocabulary tokens; at least 2 are needed to train")]
    CorpusTooShort { tokens: usize },

    #[error("word not in vocabulary: {0:?}")]
    OutOfVocabulary(String),

    #[error("cosine similarity undefined for a zero-norm vector")]
    ZeroNorm,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite training loss in batch {batch}")]
    NonFiniteLoss { batch: usize },

    #[error("non-finite validation loss {loss} after epoch {epoch}")]
    NonFiniteValidation { epoch: usize, loss: f64 },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    /// Whether this error stems from a numerical failure (as opposed to bad
    /// input data or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteLoss { .. } | Error::NonFiniteValidation { .. } | Error::ZeroNorm
        )
    }
}

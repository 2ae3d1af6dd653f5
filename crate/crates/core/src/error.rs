use std::io;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no tokens left after normalizing {0:?}")]
    EmptyAfterNormalization(String),

    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),

    #[error("malformed term URI {uri:?}: {reason}")]
    MalformedUri { uri: String, reason: &'static str },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown relation {relation:?}")]
    UnknownRelation { line: usize, relation: String },

    #[error("unknown node {0}")]
    UnknownNode(String),

    #[error("requested rank {k} exceeds the largest admissible rank {max}")]
    RankTooLarge { k: usize, max: usize },

    #[error("matrix contains non-finite values")]
    NonFiniteInput,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("graph is empty")]
    EmptyGraph,

    #[error("no shared vocabulary: {0}")]
    EmptyIntersection(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("split {split:?} is not defined for dataset {dataset:?}")]
    UnknownSplit { dataset: String, split: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Attaches a file path to an error raised while reading that file.
    pub fn in_file(self, path: impl AsRef<std::path::Path>) -> Self {
        Error::File {
            path: path.as_ref().display().to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::collections::BTreeSet;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// A malformed input line. Line numbers are 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown paragraph id {0:?}")]
    UnknownParagraph(String),

    #[error("vector spaces do not match: {0}")]
    SpaceMismatch(String),

    #[error("query sets differ: only in A {only_a:?}, only in B {only_b:?}")]
    QuerySetMismatch { only_a: BTreeSet<String>, only_b: BTreeSet<String> },

    #[error("no relevant paragraphs in training data")]
    NoPositives,

    /// A failure inside one named stage of a multi-stage command.
    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },

    #[error(transparent)]
    Linker(#[from] crate::semvec::LinkerError),
}

impl Error {
    /// The underlying error with any stage wrappers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}

pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage { stage, source: Box::new(e) })
    }
}

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset construction, resampling, fitting, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The data cannot support the requested estimate (e.g. zero variance).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Every candidate scored -inf; no selection or weighting is possible.
    #[error("no valid candidate: {0}")]
    NoValidCandidate(String),

    /// A numeric operation failed, tagged with the candidate it belongs to
    /// when one is in scope.
    #[error("numeric failure{}: {detail}", candidate.map(|b| format!(" (candidate {b})")).unwrap_or_default())]
    Numeric {
        candidate: Option<usize>,
        detail: String,
    },

    /// A file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn numeric(candidate: Option<usize>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            candidate,
            detail: detail.into(),
        }
    }

    /// Attach a candidate label to a numeric error that lacks one.
    pub(crate) fn tag_candidate(self, b: usize) -> Self {
        match self {
            Error::Numeric {
                candidate: None,
                detail,
            } => Error::Numeric {
                candidate: Some(b),
                detail,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

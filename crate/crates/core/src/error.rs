use crate::bits::BitString;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("string {0} lies outside the left domain [{1}, {2}]")]
    Domain(BitString, u32, u32),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("construction failed: {reason}")]
    ConstructionFailure {
        reason: String,
        /// Left subset that violated the requested property on the last attempt.
        witness: Vec<BitString>,
    },

    #[error("{0} was already presented to the matcher")]
    Duplicate(BitString),

    #[error("no unused neighbor for {0} at any layer")]
    MatchingFailure(BitString),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}

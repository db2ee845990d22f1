use thiserror::Error;

use crate::tree::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation (k < 2, n = 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no {k}-phylogenetic tree has {n} leaves")]
    Inadmissible { k: u32, n: usize },

    #[error(
        "count table for k={k} covers n <= {have} with {rank_rows} rank rows, requested n={need} rank={need_rank}"
    )]
    TableTooSmall {
        k: u32,
        have: usize,
        rank_rows: usize,
        need: usize,
        need_rank: u32,
    },

    /// Two independent computations of the same quantity disagreed.
    #[error("internal consistency failure: {0}")]
    Consistency(String),

    #[error("newick parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid tree: {0}")]
    Invalid(Violation),

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("support of {count} trees exceeds the cap of {cap}")]
    TooLarge { count: String, cap: u64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn consistency(msg: impl Into<String>) -> Self {
        Error::Consistency(msg.into())
    }

    /// True for errors that indicate a bug rather than misuse.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Consistency(_))
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Invalid(v)
    }
}

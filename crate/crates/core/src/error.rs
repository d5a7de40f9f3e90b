use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The operands' representations admit no common refinement.
    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    /// Working precision is too small to decide a comparison or to
    /// represent the requested prefix.
    #[error("precision insufficient: {0}")]
    PrecisionInsufficient(String),

    /// Two interval scalars overlap without being identical.
    #[error("ambiguous comparison: {0}")]
    AmbiguousComparison(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A table-backed Psi does not cover the candidate range.
    #[error("psi table too short: needed {needed}, have {have}")]
    TableTooShort { needed: u64, have: u64 },

    #[error("not a member: {0}")]
    NonMember(String),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    /// The stage recurrence produced an inconsistent witness.
    #[error("construction failure: {0}")]
    ConstructionFailure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

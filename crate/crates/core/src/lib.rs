//! Core library: exact/interval scalars, representable sequences, norms on
//! symmetric (and deliberately non-symmetric) sequence spaces, shift-invariant
//! limit estimation, constructive witnesses, and randomized verification.

pub mod error;
pub mod fixed;
pub mod json;
pub mod scalar;
pub mod seq;
pub mod limits;
pub mod verify;
pub mod witness;
pub mod spaces;

pub use error::{Error, Result};
pub use scalar::{Prec, Rat, RatInterval};
pub use seq::{Base, Coeff, IndexSetSpec, InjectionSpec, Sequence, Tail};

/// Sequence with exact rational entries.
pub type RatSeq = Sequence<Rat>;
/// Sequence with certified rational-interval entries.
pub type IntervalSeq = Sequence<RatInterval>;

//! Exact computation of generalized Kloosterman sums for GL(N+1) over Q_p.
//!
//! The crate parametrizes the sums attached to admissible (block
//! anti-diagonal) Weyl elements through explicit Bruhat decompositions,
//! evaluates them in exact cyclotomic arithmetic, and cross-checks every
//! route against a definition-level brute-force oracle.

pub mod bounds;
pub mod bruhat;
pub mod cyclotomic;
pub mod diagram;
pub mod error;
pub mod oracle;
pub mod padic;
pub mod sum;
pub mod verify;
pub mod weyl;

/// Default exact integer scalar.
pub type Int = num::BigInt;
/// Default exact rational scalar.
pub type Rat = num::rational::Ratio<Int>;
/// Rational matrix over the default scalar.
pub type Matrix = padic::RationalMatrix<Int>;
/// Z[1/p] scalar over the default integer type.
pub type Scalar = padic::PadicScalar<Int>;

pub use error::{Error, Result};

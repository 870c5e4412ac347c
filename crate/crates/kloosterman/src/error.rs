use std::fmt;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A block composition must contain at least one block.
    EmptyBlocks,
    /// Block sizes must be positive.
    ZeroBlock,
    /// The operation needs a Weyl element with at least two blocks.
    SingleBlock,
    /// The operation needs a Weyl element with at least three blocks.
    TooFewBlocks { needed: usize, got: usize },
    /// The operation only applies to a two-block Weyl element.
    NotTwoBlock,
    /// Two values built for different primes were combined.
    PrimeMismatch { left: u64, right: u64 },
    /// A modular inverse of a non-unit was requested.
    NotAUnit { value: String, modulus: String },
    /// A rational number with a denominator that is not a p-power.
    NonPPowerDenominator { denominator: String, p: u64 },
    /// The enumeration would exceed the configured budget; no partial result
    /// is produced.
    BudgetExceeded { required: u128, budget: u128 },
    /// A matrix is not in the Bruhat cell of the given Weyl element; the
    /// offending pivot position is reported (1-based row/column).
    NotInCell { row: usize, col: usize },
    /// Cell data does not match the index set of the Weyl element.
    CellMismatch { expected: usize, got: usize },
    /// Path endpoints lie in different diagram blocks.
    DifferentBlocks,
    /// A vertex is not part of the diagram.
    UnknownVertex { i: u32, j: u32 },
    /// The exponent vector has the wrong length.
    BadExponentVector { expected: usize, got: usize },
    /// A character vector has the wrong length.
    BadCharacterVector { expected: usize, got: usize },
    /// Generic precondition violation with a description.
    Precondition(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::EmptyBlocks => write!(f, "block composition must be nonempty"),
            Error::ZeroBlock => write!(f, "block sizes must be positive"),
            Error::SingleBlock => {
                write!(f, "operation requires a Weyl element with at least two blocks")
            }
            Error::TooFewBlocks { needed, got } => {
                write!(f, "operation requires at least {needed} blocks, got {got}")
            }
            Error::NotTwoBlock => write!(f, "operation requires a two-block Weyl element"),
            Error::PrimeMismatch { left, right } => {
                write!(f, "prime mismatch: {left} vs {right}")
            }
            Error::NotAUnit { value, modulus } => {
                write!(f, "{value} is not invertible modulo {modulus}")
            }
            Error::NonPPowerDenominator { denominator, p } => {
                write!(f, "denominator {denominator} is not a power of {p}")
            }
            Error::BudgetExceeded { required, budget } => {
                write!(f, "enumeration of {required} items exceeds budget {budget}")
            }
            Error::NotInCell { row, col } => {
                write!(f, "matrix is not in the Bruhat cell: zero pivot at ({row},{col})")
            }
            Error::CellMismatch { expected, got } => {
                write!(f, "cell has {got} coordinates, index set has {expected}")
            }
            Error::DifferentBlocks => write!(f, "path endpoints lie in different blocks"),
            Error::UnknownVertex { i, j } => write!(f, "vertex ({i},{j}) is not in the diagram"),
            Error::BadExponentVector { expected, got } => {
                write!(f, "exponent vector must have length {expected}, got {got}")
            }
            Error::BadCharacterVector { expected, got } => {
                write!(f, "character vector must have length {expected}, got {got}")
            }
            Error::Precondition(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

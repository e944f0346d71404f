use thiserror::Error;

use crate::net::frame::{ErrorCode, FrameError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("prime {0} is too large (symbols are stored as u32)")]
    PrimeTooLarge(u64),

    #[error("symbol {symbol} is outside the field F_{prime}")]
    SymbolOutOfRange { symbol: u64, prime: u32 },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// N < 2 or K < 2: symmetric retrieval is infeasible or trivial.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("desired index {index} is outside 1..={count}")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("incomplete session: {0}")]
    IncompleteSession(String),

    #[error("common randomness exhausted: {consumed} of {available} symbols already used")]
    RandomnessExhausted { consumed: usize, available: usize },

    #[error("user randomness has {actual} coins, plan needs {expected}")]
    CoinCount { expected: usize, actual: usize },

    #[error("enumeration needs {required} joint states per desired index, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("frame error: {0}")]
    Frame(#[from] FrameError),

    #[error("database {database} returned error {code:?}: {message}")]
    Remote {
        database: usize,
        code: ErrorCode,
        message: String,
    },

    #[error("session aborted: {0}")]
    Aborted(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("singular curve: 4a^3 + 27b^2 = 0 for (a, b) = ({a}, {b})")]
    SingularCurve { a: i64, b: i64 },
    #[error("{0} is outside the open Hasse window of {1}")]
    OutsideHasseWindow(u64, u64),
    #[error("chain value overflowed 63 bits after prime {0}")]
    Overflow(u64),
    #[error("class number cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{x} is not invertible modulo {modulus}")]
    NotInvertible { x: i64, modulus: u64 },
    #[error("invalid modulus {0}")]
    InvalidModulus(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("sieve window of {len} entries exceeds the memory budget of {budget_bytes} bytes")]
    WindowTooLarge { len: u64, budget_bytes: u64 },
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("residue {a} is not coprime to {q}")]
    NonReducedResidue { a: u64, q: u64 },
    #[error("interval {{{start}, .., {end}}} is not contained in [1, {max}]")]
    IntervalOutOfRange { start: u64, end: u64, max: u64 },
    #[error("insufficient spread in measurements: {0}")]
    InsufficientSpread(String),
    #[error("argument {0} outside the function domain")]
    DomainError(f64),
    #[error("test function support of {0} lattice points exceeds the quadrature budget")]
    SupportTooLarge(u64),
    #[error("character is not primitive modulo {0}")]
    NotPrimitive(u64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

pub type Result<T> = std::result::Result<T, Error>;

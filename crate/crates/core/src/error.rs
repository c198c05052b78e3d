use thiserror::Error;

use crate::arith::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent out of range")]
    Overflow,
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: Rational },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("the two boundary points must be distinct")]
    EqualPoints,
    #[error("packing parameter H must exceed 1, got {0}")]
    InvalidPacking(Rational),
    #[error("set is empty")]
    EmptySet,
    #[error("{what} ({value}) must be coprime to p = {p}")]
    NotCoprime { what: &'static str, value: String, p: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("boundary encodings are not over a common window")]
    IncomparableWindows,
    #[error("fundamental set is empty; the bound D is too small")]
    EmptyIndexSet,
    #[error("every candidate argument for {0} is zero")]
    DegenerateBound(&'static str),
    #[error("map has no value at grid point {0}")]
    MissingPoint(Rational),
    #[error("no admissible generator: threshold s0 = {s0} exceeds the generator depth limit {limit}")]
    WindowTooSmall { s0: u64, limit: u32 },
    #[error("map does not fix 0 (phi(0) = {0})")]
    NotNormalized(Rational),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

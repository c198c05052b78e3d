//! Exact rationals, p-adic valuations and logarithmic distances.
//!
//! Every quantity in the crate is an exact rational. Distances that are
//! logarithms of rationals are carried as [`LogDist`] so that comparing them
//! reduces to comparing their arguments.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number, always stored in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Self> {
        let den = den.into();
        if den.is_zero() {
            return Err(Error::Parse("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(num.into(), den)))
    }

    /// `num/den` for small literals. Panics on a zero denominator.
    pub fn ratio(num: i64, den: i64) -> Self {
        Rational::new(num, den).expect("nonzero denominator")
    }

    pub fn from_int(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn recip(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Rational(self.0.recip()))
    }

    /// `self^e` for any integer exponent; `0^e` with `e < 0` is an error.
    pub fn pow(&self, e: i64) -> Result<Self> {
        if e < 0 && self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let mag = u32::try_from(e.unsigned_abs()).map_err(|_| Error::Overflow)?;
        let base = if e < 0 { self.0.recip() } else { self.0.clone() };
        Ok(Rational(num_traits::pow(base, mag as usize)))
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("not a rational: {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                Rational::new(n, d)
            }
            None => {
                let n: BigInt = s.parse().map_err(|_| bad())?;
                Ok(Rational::from_int(n))
            }
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_int(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::from_int(n)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div<&Rational> for &Rational {
    type Output = Rational;
    /// Panics on division by zero, like the integer types.
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "rational division by zero");
        Rational(&self.0 / &rhs.0)
    }
}

impl Div<Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        &self / &rhs
    }
}

impl Div<&Rational> for Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        &self / rhs
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

/// A rational prime, checked at construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }

    pub fn to_bigint(self) -> BigInt {
        BigInt::from(self.0)
    }

    /// `p^e` as a rational, for any integer `e`.
    pub fn pow(self, e: i64) -> Rational {
        Rational::from_int(self.0)
            .pow(e)
            .expect("prime powers are nonzero")
    }

    /// `p^e` as an integer, `e ≥ 0`.
    pub fn int_pow(self, e: u32) -> BigInt {
        num_traits::pow(self.to_bigint(), e as usize)
    }

    /// Whether `n` is divisible by `p`.
    pub fn divides(self, n: &BigInt) -> bool {
        (n % self.to_bigint()).is_zero()
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// A p-adic valuation: an integer, or infinity for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(n) => Some(n),
            Valuation::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinity)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(n) => write!(f, "{n}"),
            Valuation::Infinity => f.write_str("inf"),
        }
    }
}

/// Exponent of `p` in a nonzero integer.
pub(crate) fn int_valuation(n: &BigInt, p: Prime) -> i64 {
    debug_assert!(!n.is_zero());
    if let Some(mut small) = n.abs().to_u128() {
        let p = p.get() as u128;
        let mut v = 0;
        while small % p == 0 {
            small /= p;
            v += 1;
        }
        return v;
    }
    let pb = p.to_bigint();
    let mut n = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = n.div_rem(&pb);
        if !r.is_zero() {
            return v;
        }
        n = q;
        v += 1;
    }
}

/// Splits a nonzero integer as `p^v · u` with `p ∤ u`.
pub(crate) fn split_int(n: &BigInt, p: Prime) -> (i64, BigInt) {
    let v = int_valuation(n, p);
    let u = n / p.int_pow(v as u32);
    (v, u)
}

/// The p-adic valuation of `x`.
pub fn val_p(x: &Rational, p: Prime) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinity;
    }
    Valuation::Finite(int_valuation(x.numer(), p) - int_valuation(x.denom(), p))
}

/// The p-adic absolute value `p^{-val_p(x)}`, with `abs_p(0) = 0`.
pub fn abs_p(x: &Rational, p: Prime) -> Rational {
    match val_p(x, p) {
        Valuation::Infinity => Rational::zero(),
        Valuation::Finite(v) => p.pow(-v),
    }
}

/// The part of the denominator of `x` prime to `p`.
pub fn prime_to_p_denominator(x: &Rational, p: Prime) -> BigInt {
    split_int(x.denom(), p).1
}

/// Representative of `x mod p^m Z_p` in `Z[1/p] ∩ [0, p^m)`.
pub fn reduce_mod_power(x: &Rational, p: Prime, m: i64) -> Rational {
    let v = match val_p(x, p) {
        Valuation::Infinity => return Rational::zero(),
        Valuation::Finite(v) => v,
    };
    if v >= m {
        return Rational::zero();
    }
    let shift = (-v).max(0);
    let scaled = x * &p.pow(shift);
    let modulus = p.int_pow((m + shift) as u32);
    let inv = mod_inverse(scaled.denom(), &modulus);
    let residue = (scaled.numer() * inv).mod_floor(&modulus);
    Rational::from_int(residue) / p.pow(shift)
}

/// Inverse of `a` modulo `m`, for coprime `a` and `m`.
pub(crate) fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    if m.is_one() {
        return BigInt::zero();
    }
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one(), "mod_inverse of non-unit");
    e.x.mod_floor(m)
}

/// Largest integer `k` with `base^k ≤ x`, for `x > 0` and `base > 1`.
pub fn floor_log(x: &Rational, base: &Rational) -> i64 {
    assert!(x.is_positive(), "floor_log of a non-positive value");
    assert!(*base > Rational::one(), "floor_log base must exceed one");
    let bits = |r: &Rational| r.numer().bits() as i64 - r.denom().bits() as i64;
    let base_bits = bits(base).max(1);
    let mut k = bits(x) / base_bits;
    let pow = |k: i64| base.pow(k).expect("nonzero base");
    while pow(k) > *x {
        k -= 1;
    }
    while pow(k + 1) <= *x {
        k += 1;
    }
    k
}

/// Smallest integer `k` with `base^k ≥ x`, for `x > 0` and `base > 1`.
pub fn ceil_log(x: &Rational, base: &Rational) -> i64 {
    let k = floor_log(x, base);
    if base.pow(k).expect("nonzero base") == *x {
        k
    } else {
        k + 1
    }
}

/// The distance `log(argument)` for a positive rational argument.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LogDist(Rational);

impl LogDist {
    pub fn new(argument: Rational) -> Result<Self> {
        if !argument.is_positive() {
            return Err(Error::NonPositive {
                what: "log-distance argument",
                value: argument,
            });
        }
        Ok(LogDist(argument))
    }

    pub fn zero() -> Self {
        LogDist(Rational::one())
    }

    pub fn argument(&self) -> &Rational {
        &self.0
    }

    /// `log(a) + log(b) = log(ab)`.
    pub fn combine(&self, other: &LogDist) -> LogDist {
        LogDist(&self.0 * &other.0)
    }
}

impl fmt::Display for LogDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log({})", self.0)
    }
}

impl Serialize for LogDist {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// `gcd(n, p) = 1` for an integer and a prime.
pub fn coprime_to(n: &BigInt, p: Prime) -> bool {
    !n.is_zero() && !p.divides(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: u64) -> Prime {
        Prime::new(n).unwrap()
    }

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(val_p(&q("18"), p(3)), Valuation::Finite(2));
        assert_eq!(val_p(&q("0"), p(7)), Valuation::Infinity);
        assert_eq!(val_p(&q("3/8"), p(2)), Valuation::Finite(-3));
        assert!(Valuation::Infinity > Valuation::Finite(i64::MAX));
    }

    #[test]
    fn absolute_value_examples() {
        assert_eq!(abs_p(&q("3/8"), p(2)), q("8"));
        assert_eq!(abs_p(&q("0"), p(5)), q("0"));
        assert_eq!(abs_p(&q("50"), p(5)), q("1/25"));
    }

    #[test]
    fn logdist_examples() {
        let l = |s: &str| LogDist::new(q(s)).unwrap();
        assert_eq!(l("4").combine(&l("9")), l("36"));
        assert_eq!(l("7/3").combine(&LogDist::zero()), l("7/3"));
        // p = 3, H = 5/2: log(p^2) + log(H^2) = log(p^2 H^2)
        assert_eq!(l("9").combine(&l("25/4")), l("225/4"));
        assert!(LogDist::new(q("0")).is_err());
        assert!(LogDist::new(q("-1")).is_err());
    }

    #[test]
    fn non_primes_rejected() {
        for n in [0, 1, 4, 9, 15, 91] {
            assert!(Prime::new(n).is_err());
        }
        assert!(Prime::new(97).is_ok());
    }

    #[test]
    fn display_and_parse() {
        assert_eq!(q("6/4").to_string(), "3/2");
        assert_eq!(q("-8/4").to_string(), "-2");
        assert_eq!(q(" 5 / -10 ").to_string(), "-1/2");
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn reduction_mod_powers() {
        assert_eq!(reduce_mod_power(&q("5"), p(2), 1), q("1"));
        assert_eq!(reduce_mod_power(&q("5"), p(2), 2), q("1"));
        assert_eq!(reduce_mod_power(&q("5"), p(2), 3), q("5"));
        assert_eq!(reduce_mod_power(&q("3/4"), p(2), 0), q("3/4"));
        assert_eq!(reduce_mod_power(&q("3/4"), p(2), -1), q("1/4"));
        assert_eq!(reduce_mod_power(&q("3/4"), p(2), -2), q("0"));
        // 1/3 = ...0101011 in Z_2; mod 8 the residue is 3 (3·3 = 9 ≡ 1)
        assert_eq!(reduce_mod_power(&q("1/3"), p(2), 3), q("3"));
        assert_eq!(reduce_mod_power(&q("-1"), p(3), 2), q("8"));
    }

    #[test]
    fn logs() {
        let two = q("2");
        assert_eq!(floor_log(&q("8"), &two), 3);
        assert_eq!(floor_log(&q("9"), &two), 3);
        assert_eq!(floor_log(&q("1/8"), &two), -3);
        assert_eq!(floor_log(&q("1/9"), &two), -4);
        assert_eq!(ceil_log(&q("9"), &two), 4);
        assert_eq!(ceil_log(&q("1"), &q("5")), 0);
    }
}

//! Rational 2×2 matrices modulo scalars and their action on `Q ∪ {∞}`.
//!
//! A [`ProjMatrix`] keeps the representative it was built from, so exact
//! products such as `g·M·g⁻¹` retain their determinant, but equality and
//! hashing go through the scalar-free canonical form.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{Prime, Rational};
use crate::error::{Error, Result};

/// A point of `Q ∪ {∞}`, the rational boundary shared by the hyperbolic
/// plane and the tree.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum BoundaryPoint {
    Finite(Rational),
    Infinity,
}

impl BoundaryPoint {
    pub fn finite(x: Rational) -> Self {
        BoundaryPoint::Finite(x)
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            BoundaryPoint::Finite(x) => Some(x),
            BoundaryPoint::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }
}

impl From<Rational> for BoundaryPoint {
    fn from(x: Rational) -> Self {
        BoundaryPoint::Finite(x)
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Finite(x) => write!(f, "{x}"),
            BoundaryPoint::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for BoundaryPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" | "oo" => Ok(BoundaryPoint::Infinity),
            other => Ok(BoundaryPoint::Finite(other.parse()?)),
        }
    }
}

impl Serialize for BoundaryPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A nonsingular rational 2×2 matrix `[[a, b], [c, d]]` up to a nonzero
/// scalar.
#[derive(Clone)]
pub struct ProjMatrix {
    entries: [Rational; 4],
}

impl ProjMatrix {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Result<Self> {
        let m = ProjMatrix {
            entries: [a, b, c, d],
        };
        if m.det().is_zero() {
            return Err(Error::SingularMatrix);
        }
        Ok(m)
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        ProjMatrix::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        ProjMatrix {
            entries: [Rational::one(), Rational::zero(), Rational::zero(), Rational::one()],
        }
    }

    pub fn diag(x: Rational, y: Rational) -> Result<Self> {
        ProjMatrix::new(x, Rational::zero(), Rational::zero(), y)
    }

    /// `diag(p, 1/p)`.
    pub fn scaling(p: Prime) -> Self {
        ProjMatrix::diag(p.pow(1), p.pow(-1)).expect("nonsingular")
    }

    /// `[[1, t], [0, 1]]`.
    pub fn translation(t: Rational) -> Self {
        ProjMatrix::new(Rational::one(), t, Rational::zero(), Rational::one()).expect("det 1")
    }

    /// The stored representative `[a, b, c, d]`.
    pub fn entries(&self) -> &[Rational; 4] {
        &self.entries
    }

    pub fn a(&self) -> &Rational {
        &self.entries[0]
    }
    pub fn b(&self) -> &Rational {
        &self.entries[1]
    }
    pub fn c(&self) -> &Rational {
        &self.entries[2]
    }
    pub fn d(&self) -> &Rational {
        &self.entries[3]
    }

    /// Determinant of the stored representative.
    pub fn det(&self) -> Rational {
        let [a, b, c, d] = &self.entries;
        a * d - b * c
    }

    pub fn mul(&self, rhs: &ProjMatrix) -> ProjMatrix {
        let [a, b, c, d] = &self.entries;
        let [e, f, g, h] = &rhs.entries;
        ProjMatrix {
            entries: [a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h],
        }
    }

    /// Exact inverse of the stored representative.
    pub fn inverse(&self) -> ProjMatrix {
        let det = self.det();
        let [a, b, c, d] = &self.entries;
        ProjMatrix {
            entries: [d / &det, -b / &det, -c / &det, a / &det],
        }
    }

    pub fn pow(&self, n: i64) -> ProjMatrix {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = ProjMatrix::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    /// Multiply the representative by a nonzero scalar.
    pub fn scaled(&self, s: &Rational) -> ProjMatrix {
        assert!(!s.is_zero());
        ProjMatrix {
            entries: self.entries.clone().map(|e| e * s),
        }
    }

    /// Scalar-free form: coprime integer entries whose first nonzero entry
    /// is positive.
    pub fn canonical(&self) -> [BigInt; 4] {
        let lcm = self
            .entries
            .iter()
            .fold(BigInt::one(), |acc, e| acc.lcm(e.denom()));
        let ints: Vec<BigInt> = self
            .entries
            .iter()
            .map(|e| e.numer() * (&lcm / e.denom()))
            .collect();
        let gcd = ints.iter().fold(BigInt::zero(), |acc, e| acc.gcd(e));
        let mut ints: Vec<BigInt> = ints.into_iter().map(|e| e / &gcd).collect();
        if ints.iter().find(|e| !e.is_zero()).is_some_and(|e| e.is_negative()) {
            for e in &mut ints {
                *e = -&*e;
            }
        }
        let [a, b, c, d]: [BigInt; 4] = ints.try_into().expect("four entries");
        [a, b, c, d]
    }

    /// Representative with determinant `±1`, when one exists over `Q`.
    pub fn unimodular(&self) -> Option<ProjMatrix> {
        let det = self.det();
        let root = rational_sqrt(&det.abs())?;
        Some(self.scaled(&root.recip().expect("nonzero")))
    }

    /// The fractional-linear action on `Q ∪ {∞}`.
    pub fn apply(&self, x: &BoundaryPoint) -> BoundaryPoint {
        let [a, b, c, d] = &self.entries;
        match x {
            BoundaryPoint::Infinity => {
                if c.is_zero() {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(a / c)
                }
            }
            BoundaryPoint::Finite(x) => {
                let den = c * x + d;
                if den.is_zero() {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((a * x + b) / den)
                }
            }
        }
    }
}

/// Exact square root of a nonnegative rational, if it is a square.
pub(crate) fn rational_sqrt(x: &Rational) -> Option<Rational> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer().sqrt();
    let d = x.denom().sqrt();
    if &(&n * &n) == x.numer() && &(&d * &d) == x.denom() {
        Some(Rational::new(n, d).expect("positive denominator"))
    } else {
        None
    }
}

/// Möbius action of `g` on a boundary point.
pub fn mobius_point(g: &ProjMatrix, x: &BoundaryPoint) -> BoundaryPoint {
    g.apply(x)
}

impl PartialEq for ProjMatrix {
    fn eq(&self, other: &Self) -> bool {
        // proportional iff every 2×2 cross product vanishes
        let (x, y) = (&self.entries, &other.entries);
        (0..4).all(|i| (i + 1..4).all(|j| &x[i] * &y[j] == &x[j] * &y[i]))
    }
}

impl Eq for ProjMatrix {}

impl Hash for ProjMatrix {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical().hash(state);
    }
}

impl fmt::Debug for ProjMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = &self.entries;
        write!(f, "[[{a}, {b}], [{c}, {d}]]")
    }
}

impl fmt::Display for ProjMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for ProjMatrix {
    type Err = Error;

    /// Parses `"a,b;c,d"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("expected \"a,b;c,d\", got {s:?}"));
        let (top, bottom) = s.split_once(';').ok_or_else(bad)?;
        let (a, b) = top.split_once(',').ok_or_else(bad)?;
        let (c, d) = bottom.split_once(',').ok_or_else(bad)?;
        ProjMatrix::new(a.parse()?, b.parse()?, c.parse()?, d.parse()?)
    }
}

impl Serialize for ProjMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let [a, b, c, d] = &self.entries;
        [[a, b], [c, d]].serialize(serializer)
    }
}

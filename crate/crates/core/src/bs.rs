//! Solvable Baumslag–Solitar groups `BS(1, n) = ⟨a, b | a b a⁻¹ = bⁿ⟩`:
//! commensurability, the embedding of `BS(1, p²)` into `PSL₂(Z[1/p])`, and
//! the boundary and horostrip data of the complex `X_n`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::arith::{LogDist, Prime, Rational};
use crate::error::{Error, Result};
use crate::matrix::ProjMatrix;

/// Largest `r` with `n = r^e` for some `e ≥ 1`, together with `e`.
pub fn primitive_root(n: u64) -> (u64, u32) {
    assert!(n >= 2);
    let max_e = 64 - n.leading_zeros();
    for e in (2..=max_e).rev() {
        if let Some(r) = exact_root(n, e) {
            return (r, e);
        }
    }
    (n, 1)
}

fn exact_root(n: u64, e: u32) -> Option<u64> {
    let guess = (n as f64).powf(1.0 / e as f64).round() as u64;
    (guess.saturating_sub(1)..=guess + 1)
        .filter(|r| *r >= 2)
        .find(|r| r.checked_pow(e) == Some(n))
}

/// Common root `r` with `m = r^j`, `n = r^k`, if there is one.
pub fn common_root(m: u64, n: u64) -> Result<Option<u64>> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "BS(1, n) needs n ≥ 2, got ({m}, {n})"
        )));
    }
    let (rm, _) = primitive_root(m);
    let (rn, _) = primitive_root(n);
    Ok((rm == rn).then_some(rm))
}

/// Whether `BS(1, m)` and `BS(1, n)` are commensurable.
pub fn bs_commensurable(m: u64, n: u64) -> Result<bool> {
    Ok(common_root(m, n)?.is_some())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    A,
    AInv,
    B,
    BInv,
}

impl Letter {
    pub fn inverse(self) -> Letter {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }
}

/// A freely reduced word in `a^{±1}`, `b^{±1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BsWord(Vec<Letter>);

impl BsWord {
    pub fn new(letters: impl IntoIterator<Item = Letter>) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        BsWord(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &BsWord) -> BsWord {
        BsWord::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn inverse(&self) -> BsWord {
        BsWord(self.0.iter().rev().map(|l| l.inverse()).collect())
    }
}

impl FromStr for BsWord {
    type Err = Error;

    /// Accepts `a`, `b`, uppercase for inverses, and the suffixes `⁻¹`,
    /// `^-1` or `'`, e.g. `"aba⁻¹"`, `"abA"`, `"a b a^-1"`.
    fn from_str(s: &str) -> Result<Self> {
        let mut letters = Vec::new();
        let mut rest = s.trim();
        while let Some(c) = rest.chars().next() {
            rest = &rest[c.len_utf8()..];
            let mut l = match c {
                'a' => Letter::A,
                'A' => Letter::AInv,
                'b' => Letter::B,
                'B' => Letter::BInv,
                ' ' | '·' | '*' => continue,
                other => return Err(Error::Parse(format!("unexpected {other:?} in word {s:?}"))),
            };
            for suffix in ["⁻¹", "^-1", "'"] {
                if let Some(r) = rest.strip_prefix(suffix) {
                    l = l.inverse();
                    rest = r;
                    break;
                }
            }
            letters.push(l);
        }
        Ok(BsWord::new(letters))
    }
}

impl fmt::Display for BsWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            f.write_str(match l {
                Letter::A => "a",
                Letter::AInv => "A",
                Letter::B => "b",
                Letter::BInv => "B",
            })?;
        }
        Ok(())
    }
}

/// `a ↦ diag(p, 1/p)`, `b ↦ [[1, 1], [0, 1]]`, a homomorphism from
/// `BS(1, p²)`.
pub fn phi_embed(w: &BsWord, p: Prime) -> ProjMatrix {
    let a = ProjMatrix::scaling(p);
    let b = ProjMatrix::translation(Rational::one());
    w.letters()
        .iter()
        .fold(ProjMatrix::identity(), |acc, l| {
            let m = match l {
                Letter::A => a.clone(),
                Letter::AInv => a.inverse(),
                Letter::B => b.clone(),
                Letter::BInv => b.inverse(),
            };
            acc.mul(&m)
        })
}

/// A hyperbolic plane of `X_n`, i.e. a coherently oriented line of `T_n`,
/// recorded by its branch choices at heights `base, base + 1, …` within a
/// finite window. Below `base` all encodings in a comparison are assumed to
/// agree.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct UpperBoundaryPoint {
    pub base: i64,
    pub digits: Vec<u32>,
}

impl UpperBoundaryPoint {
    pub fn new(base: i64, digits: Vec<u32>) -> Self {
        UpperBoundaryPoint { base, digits }
    }
}

/// `n^{-k}` where `k` is the height where the two planes first diverge.
pub fn upper_boundary_distance(
    x: &UpperBoundaryPoint,
    y: &UpperBoundaryPoint,
    n: u64,
) -> Result<Rational> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("BS(1, n) needs n ≥ 2, got {n}")));
    }
    if x.base != y.base || x.digits.len() != y.digits.len() {
        return Err(Error::IncomparableWindows);
    }
    if let Some(&d) = x.digits.iter().chain(&y.digits).find(|&&d| u64::from(d) >= n) {
        return Err(Error::InvalidArgument(format!("branch digit {d} out of range for n = {n}")));
    }
    match x.digits.iter().zip(&y.digits).position(|(a, b)| a != b) {
        None => Ok(Rational::zero()),
        Some(i) => Rational::from_int(n).pow(-(x.base + i as i64)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HorostripWidth {
    /// Width inside the horosphere's own hyperbolic planes.
    pub intrinsic: LogDist,
    /// Width in `H² × T_p`: the same hyperbolic part plus one tree edge.
    pub ambient_log: LogDist,
    pub ambient_edges: u32,
}

/// Width of the horostrip of `σ_∞` between adjacent tree heights, measured
/// from fiber height `h` to `p²·h`.
pub fn horostrip_width(p: Prime, h: &Rational) -> Result<HorostripWidth> {
    if !h.is_positive() {
        return Err(Error::NonPositive {
            what: "fiber height",
            value: h.clone(),
        });
    }
    let upper = p.pow(2) * h;
    let intrinsic = LogDist::new(upper / h)?;
    Ok(HorostripWidth {
        ambient_log: intrinsic.clone(),
        intrinsic,
        ambient_edges: 1,
    })
}

//! `PSL₂(Q)` as commensurator of `PSL₂(Z[1/p])`: pair transporters,
//! conjugation and bounded-denominator profiles.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;
use serde::{Serialize, Serializer};

use crate::arith::{prime_to_p_denominator, Prime, Rational};
use crate::error::{Error, Result};
use crate::matrix::{BoundaryPoint, ProjMatrix};

/// A matrix sending `α ↦ 0` and `β ↦ ∞`.
pub fn transporter(alpha: &BoundaryPoint, beta: &BoundaryPoint) -> Result<ProjMatrix> {
    use BoundaryPoint::*;
    let one = Rational::one;
    match (alpha, beta) {
        _ if alpha == beta => Err(Error::EqualPoints),
        (Finite(a), Finite(b)) => ProjMatrix::new(one(), -a, one(), -b),
        (Infinity, Finite(b)) => ProjMatrix::new(Rational::zero(), one(), one(), -b),
        (Finite(a), Infinity) => ProjMatrix::new(one(), -a, Rational::zero(), one()),
        (Infinity, Infinity) => unreachable!(),
    }
}

/// `g·M·g⁻¹`, computed with the exact inverse so the determinant of `M`
/// is kept.
pub fn conjugate(g: &ProjMatrix, m: &ProjMatrix) -> ProjMatrix {
    g.mul(m).mul(&g.inverse())
}

/// The class of `diag(1, α)`, acting as `x ↦ x/α`.
pub fn diagonal_rescaler(alpha: &Rational) -> Result<ProjMatrix> {
    if !alpha.is_positive() {
        return Err(Error::NonPositive {
            what: "rescaling factor",
            value: alpha.clone(),
        });
    }
    ProjMatrix::diag(Rational::one(), alpha.clone())
}

fn as_string<S: Serializer>(n: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(n)
}

fn as_strings<S: Serializer>(ns: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ns.iter().map(|n| n.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DenominatorProfile {
    /// lcm of the prime-to-p denominators over all sampled conjugates.
    #[serde(serialize_with = "as_string")]
    pub d: BigInt,
    pub max_len: usize,
    /// Cumulative lcm over words of length `≤ i`.
    #[serde(serialize_with = "as_strings")]
    pub by_length: Vec<BigInt>,
    pub words: u64,
    pub stable: bool,
}

fn matrix_denominator(m: &ProjMatrix, p: Prime) -> BigInt {
    m.entries()
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(&prime_to_p_denominator(x, p)))
}

/// Conjugates every freely reduced word of length `≤ max_len` in the
/// generators and their inverses by `g` and records the lcm of the
/// prime-to-p parts of the entry denominators.
pub fn denominator_profile(
    g: &ProjMatrix,
    generators: &[ProjMatrix],
    max_len: usize,
    p: Prime,
) -> Result<DenominatorProfile> {
    if generators.is_empty() {
        return Err(Error::InvalidArgument("empty generating set".into()));
    }
    if let Some(bad) = generators
        .iter()
        .find(|m| !matrix_denominator(m, p).is_one())
    {
        return Err(Error::InvalidArgument(format!(
            "generator {bad} has entries outside Z[1/{p}]"
        )));
    }
    let g_inv = g.inverse();
    // letter 2i is generator i, 2i + 1 its inverse
    let letters: Vec<ProjMatrix> = generators
        .iter()
        .flat_map(|m| [m.clone(), m.inverse()])
        .collect();
    let mut frontier: Vec<(Option<usize>, ProjMatrix)> = vec![(None, ProjMatrix::identity())];
    let mut d = matrix_denominator(&g.mul(&g_inv), p);
    let mut by_length = vec![d.clone()];
    let mut words = 1u64;
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * (letters.len() - 1).max(1));
        for (last, w) in &frontier {
            for (i, l) in letters.iter().enumerate() {
                if last.is_some_and(|j| j ^ 1 == i) {
                    continue;
                }
                let word = w.mul(l);
                d = d.lcm(&matrix_denominator(&g.mul(&word).mul(&g_inv), p));
                words += 1;
                next.push((Some(i), word));
            }
        }
        by_length.push(d.clone());
        frontier = next;
    }
    let stable = max_len >= 1 && by_length[max_len] == by_length[max_len - 1];
    Ok(DenominatorProfile {
        d,
        max_len,
        by_length,
        words,
        stable,
    })
}

/// `A = diag(p, 1/p)` and `B = [[1, 1], [0, 1]]`.
pub fn standard_generators(p: Prime) -> [ProjMatrix; 2] {
    [
        ProjMatrix::scaling(p),
        ProjMatrix::translation(Rational::one()),
    ]
}

/// Prime-to-p part of the determinant of the primitive integral
/// representative of `g`; every conjugate of a determinant-one element of
/// `PSL₂(Z[1/p])` by `g` has prime-to-p denominators dividing it.
pub fn conjugation_bound(g: &ProjMatrix, p: Prime) -> BigInt {
    let [a, b, c, d] = g.canonical();
    let det = Rational::from_int(a * d - b * c);
    prime_to_p_denominator(&det.recip().expect("nonsingular"), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn pt(s: &str) -> BoundaryPoint {
        s.parse().unwrap()
    }

    #[test]
    fn transporter_examples() {
        assert_eq!(transporter(&pt("0"), &pt("inf")).unwrap(), ProjMatrix::identity());
        assert_eq!(
            transporter(&pt("1"), &pt("0")).unwrap(),
            ProjMatrix::from_ints(1, -1, 1, 0).unwrap()
        );
        for (a, b) in [("1", "0"), ("inf", "3/2"), ("-5/7", "inf"), ("1/2", "1/3")] {
            let g = transporter(&pt(a), &pt(b)).unwrap();
            assert_eq!(g.apply(&pt(a)), pt("0"));
            assert_eq!(g.apply(&pt(b)), pt("inf"));
        }
        assert_eq!(transporter(&pt("2"), &pt("2")), Err(Error::EqualPoints));
        assert_eq!(transporter(&pt("inf"), &pt("inf")), Err(Error::EqualPoints));
    }

    #[test]
    fn conjugate_examples() {
        let m = ProjMatrix::from_ints(1, 1, 0, 1).unwrap();
        assert_eq!(conjugate(&ProjMatrix::identity(), &m), m);
        let g = ProjMatrix::diag(q("1"), q("2")).unwrap();
        let c = conjugate(&g, &m);
        assert_eq!(c, ProjMatrix::new(q("1"), q("1/2"), q("0"), q("1")).unwrap());
        assert_eq!(c.det(), m.det());
    }

    #[test]
    fn rescaler_examples() {
        assert_eq!(diagonal_rescaler(&q("1")).unwrap(), ProjMatrix::identity());
        let r = diagonal_rescaler(&q("4")).unwrap();
        assert_eq!(r.apply(&pt("8")), pt("2"));
        let ab = diagonal_rescaler(&q("3/2"))
            .unwrap()
            .mul(&diagonal_rescaler(&q("5")).unwrap());
        assert_eq!(ab, diagonal_rescaler(&q("15/2")).unwrap());
        assert!(diagonal_rescaler(&q("0")).is_err());
        assert!(diagonal_rescaler(&q("-1")).is_err());
    }

    #[test]
    fn identity_profile() {
        let p = Prime::new(3).unwrap();
        let prof = denominator_profile(&ProjMatrix::identity(), &standard_generators(p), 4, p).unwrap();
        assert_eq!(prof.d, BigInt::one());
        assert!(prof.stable);
        // 1 + 4 + 12 + 36 + 108 freely reduced words
        assert_eq!(prof.words, 161);
    }

    #[test]
    fn rescaler_profile() {
        let p = Prime::new(3).unwrap();
        let g = diagonal_rescaler(&q("2")).unwrap();
        let prof = denominator_profile(&g, &standard_generators(p), 6, p).unwrap();
        assert_eq!(prof.d, BigInt::from(2));
        assert!(prof.stable);
        assert_eq!(prof.by_length[0], BigInt::one());
        assert_eq!(conjugation_bound(&g, p), BigInt::from(2));
    }

    #[test]
    fn profile_rejects_non_integral_generators() {
        let p = Prime::new(3).unwrap();
        let bad = ProjMatrix::new(q("1"), q("1/2"), q("0"), q("1")).unwrap();
        assert!(denominator_profile(&ProjMatrix::identity(), &[bad], 2, p).is_err());
        assert!(denominator_profile(&ProjMatrix::identity(), &[], 2, p).is_err());
    }
}

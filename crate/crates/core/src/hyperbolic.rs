//! Horoballs in the upper half-plane with exact sizes.
//!
//! A horoball based at `∞` is `{Im z ≥ t}` and its size is the height `t`;
//! a horoball based at a finite point has its Euclidean diameter as size.
//! Equivalently a horoball is a vector `±(x, y) ∈ R²` up to sign, with base
//! `x/y`, diameter `1/y²` (or height `x²` when `y = 0`); matrices act
//! linearly on these vectors once scaled to determinant `±1`, and the
//! distance between two disjoint horoballs is the log of the squared
//! determinant of their vectors. All of this stays rational.

use serde::Serialize;

use crate::arith::{LogDist, Rational};
use crate::error::{Error, Result};
use crate::matrix::{BoundaryPoint, ProjMatrix};

#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Horoball {
    base: BoundaryPoint,
    size: Rational,
}

impl Horoball {
    pub fn new(base: BoundaryPoint, size: Rational) -> Result<Self> {
        if !size.is_positive() {
            return Err(Error::NonPositive {
                what: "horoball size",
                value: size,
            });
        }
        Ok(Horoball { base, size })
    }

    pub fn base(&self) -> &BoundaryPoint {
        &self.base
    }

    /// Height when based at `∞`, Euclidean diameter otherwise.
    pub fn size(&self) -> &Rational {
        &self.size
    }
}

/// Distance between horoballs with different bases.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum HoroDistance {
    Apart(LogDist),
    /// Tangent or overlapping.
    Overlap,
}

impl HoroDistance {
    pub fn log_dist(&self) -> Option<&LogDist> {
        match self {
            HoroDistance::Apart(d) => Some(d),
            HoroDistance::Overlap => None,
        }
    }
}

/// Image of `h` under the isometry induced by `g`.
///
/// Works with the unnormalized representative: the factor `|det g|` enters
/// the size, so no square roots are needed.
pub fn horoball_image(g: &ProjMatrix, h: &Horoball) -> Horoball {
    let (a, b, c, d) = (g.a(), g.b(), g.c(), g.d());
    let det = g.det().abs();
    let (base, size) = match &h.base {
        BoundaryPoint::Infinity => {
            if c.is_zero() {
                (BoundaryPoint::Infinity, a.square() * &h.size / &det)
            } else {
                (BoundaryPoint::Finite(a / c), det / (c.square() * &h.size))
            }
        }
        BoundaryPoint::Finite(x) => {
            let e = c * x + d;
            if e.is_zero() {
                let top = a * x + b;
                (BoundaryPoint::Infinity, top.square() / (&h.size * &det))
            } else {
                (g.apply(&h.base), &h.size * &det / e.square())
            }
        }
    };
    Horoball { base, size }
}

/// The argument `q` with `d(h1, h2) = log q` when `q > 1`; a value `≤ 1`
/// means the horoballs touch or overlap.
pub fn horoball_gap(h1: &Horoball, h2: &Horoball) -> Result<Rational> {
    match (&h1.base, &h2.base) {
        (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => Err(Error::EqualPoints),
        (BoundaryPoint::Infinity, BoundaryPoint::Finite(_)) => Ok(&h1.size / &h2.size),
        (BoundaryPoint::Finite(_), BoundaryPoint::Infinity) => Ok(&h2.size / &h1.size),
        (BoundaryPoint::Finite(x), BoundaryPoint::Finite(y)) => {
            if x == y {
                return Err(Error::EqualPoints);
            }
            Ok((x - y).square() / (&h1.size * &h2.size))
        }
    }
}

pub fn horoball_distance(h1: &Horoball, h2: &Horoball) -> Result<HoroDistance> {
    let q = horoball_gap(h1, h2)?;
    if q <= Rational::one() {
        Ok(HoroDistance::Overlap)
    } else {
        Ok(HoroDistance::Apart(LogDist::new(q)?))
    }
}

pub(crate) fn check_packing(h: &Rational) -> Result<()> {
    if *h > Rational::one() {
        Ok(())
    } else {
        Err(Error::InvalidPacking(h.clone()))
    }
}

/// The horoball at `α` in the fiber over the basepoint: height `H` at `∞`,
/// diameter `1/(c²H)` at `α = a/c` in lowest terms.
pub fn base_horoball(alpha: &BoundaryPoint, h: &Rational) -> Result<Horoball> {
    check_packing(h)?;
    let size = match alpha {
        BoundaryPoint::Infinity => h.clone(),
        BoundaryPoint::Finite(x) => {
            let c = Rational::from_int(x.denom().clone());
            (c.square() * h).recip()?
        }
    };
    Horoball::new(alpha.clone(), size)
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

    fn ball(base: &str, size: &str) -> Horoball {
        Horoball::new(pt(base), q(size)).unwrap()
    }

    #[test]
    fn image_examples() {
        let h = ball("inf", "3");
        assert_eq!(horoball_image(&ProjMatrix::identity(), &h), h);
        let a = ProjMatrix::diag(q("3"), q("1/3")).unwrap();
        assert_eq!(horoball_image(&a, &h), ball("inf", "27"));
        // same class, different representative
        assert_eq!(horoball_image(&a.scaled(&q("-7/2")), &h), ball("inf", "27"));
    }

    #[test]
    fn image_of_basepoint_horoball_under_n() {
        // N = [[1, -3], [-1, 4]], p = 2, S = 1, s = 3 carries σ_0 at the
        // basepoint to σ_β with β = -3/4 and diameter 1/(p^{4S} H).
        let n = ProjMatrix::from_ints(1, -3, -1, 4).unwrap();
        let h = q("2");
        let sigma0 = base_horoball(&pt("0"), &h).unwrap();
        let image = horoball_image(&n, &sigma0);
        assert_eq!(image, ball("-3/4", "1/32"));
        assert_eq!(image, base_horoball(&pt("-3/4"), &h).unwrap());
        // the same matrix on the horoball at ∞ lands at N·∞ with 1/(b²H)
        let top = horoball_image(&n, &base_horoball(&pt("inf"), &h).unwrap());
        assert_eq!(top, ball("-1", "1/2"));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            horoball_distance(&ball("inf", "2"), &ball("0", "1/2")).unwrap(),
            HoroDistance::Apart(LogDist::new(q("4")).unwrap())
        );
        assert_eq!(
            horoball_distance(&ball("inf", "1"), &ball("0", "1")).unwrap(),
            HoroDistance::Overlap
        );
        assert_eq!(
            horoball_gap(&ball("1", "1/4"), &ball("0", "1/4")).unwrap(),
            q("16")
        );
        assert!(horoball_distance(&ball("1", "1"), &ball("1", "2")).is_err());
        assert!(horoball_distance(&ball("inf", "1"), &ball("inf", "2")).is_err());
    }

    #[test]
    fn base_horoball_examples() {
        let h = q("2");
        assert_eq!(base_horoball(&pt("inf"), &h).unwrap(), ball("inf", "2"));
        assert_eq!(base_horoball(&pt("0"), &h).unwrap(), ball("0", "1/2"));
        assert_eq!(base_horoball(&pt("1/2"), &h).unwrap(), ball("1/2", "1/8"));
        let s = ProjMatrix::from_ints(0, -1, 1, 0).unwrap();
        assert_eq!(
            horoball_image(&s, &ball("inf", "2")),
            base_horoball(&pt("0"), &h).unwrap()
        );
        let lower = ProjMatrix::from_ints(1, 0, 2, 1).unwrap();
        assert_eq!(
            horoball_image(&lower, &ball("inf", "2")),
            base_horoball(&pt("1/2"), &h).unwrap()
        );
        assert!(base_horoball(&pt("0"), &q("1")).is_err());
    }

    #[test]
    fn non_square_determinant() {
        // diag(1, 2) acts as x ↦ x/2, a dilation by 1/2
        let g = ProjMatrix::diag(q("1"), q("2")).unwrap();
        assert_eq!(horoball_image(&g, &ball("inf", "3")), ball("inf", "3/2"));
        assert_eq!(horoball_image(&g, &ball("4", "1")), ball("2", "1/2"));
    }
}

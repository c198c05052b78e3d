//! The Bruhat–Tits tree `T_p`.
//!
//! A vertex is the homothety class of a `Z_p`-lattice in `Q_p²`. Every class
//! has a unique basis of the form `[[p^m, b], [0, 1]]` (columns) with
//! `b ∈ Z[1/p] ∩ [0, p^m)`, and [`TreeVertex`] stores exactly that pair.
//!
//! Orientation: `m` is the height. The end `α ∈ Q` is the limit of
//! `(m, α mod p^m)` as `m → +∞`; every downward ray converges to the end `∞`.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};

use crate::arith::{reduce_mod_power, val_p, Prime, Rational, Valuation};
use crate::error::{Error, Result};
use crate::matrix::{BoundaryPoint, ProjMatrix};

/// Canonical `(m, b)` representative of a lattice class.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeVertex {
    m: i64,
    b: Rational,
}

impl TreeVertex {
    pub fn height(&self) -> i64 {
        self.m
    }

    pub fn offset(&self) -> &Rational {
        &self.b
    }

    /// The label `"m:b"` used in exported graphs.
    pub fn label(&self) -> String {
        format!("{}:{}", self.m, self.b)
    }
}

impl fmt::Display for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.b)
    }
}

impl fmt::Debug for TreeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Serialize for TreeVertex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("TreeVertex", 2)?;
        s.serialize_field("m", &self.m)?;
        s.serialize_field("b", &self.b)?;
        s.end()
    }
}

/// A rational end of the tree.
pub type TreeEnd = BoundaryPoint;

/// The geodesic line joining two distinct rational ends.
///
/// Ends are stored sorted, so lines compare as unordered pairs.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TreeLine {
    first: TreeEnd,
    second: TreeEnd,
}

impl TreeLine {
    pub fn ends(&self) -> (&TreeEnd, &TreeEnd) {
        (&self.first, &self.second)
    }
}

impl Serialize for TreeLine {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.first, &self.second].serialize(serializer)
    }
}

/// The tree `T_p` for a fixed prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BtTree {
    p: Prime,
}

impl BtTree {
    pub fn new(p: Prime) -> Self {
        BtTree { p }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    /// The basepoint `[Z_p × Z_p]`.
    pub fn root(&self) -> TreeVertex {
        TreeVertex {
            m: 0,
            b: Rational::zero(),
        }
    }

    /// The vertex with basis `[[p^m, b], [0, 1]]`, `b` reduced mod `p^m`.
    pub fn vertex(&self, m: i64, b: &Rational) -> TreeVertex {
        TreeVertex {
            m,
            b: reduce_mod_power(b, self.p, m),
        }
    }

    /// Basis matrix of the canonical representative.
    pub fn basis(&self, v: &TreeVertex) -> ProjMatrix {
        ProjMatrix::new(self.p.pow(v.m), v.b.clone(), Rational::zero(), Rational::one())
            .expect("nonsingular basis")
    }

    /// Class of the lattice spanned by the columns of `basis`.
    ///
    /// Column reduction over `Z_p`: the column whose second coordinate has
    /// the smaller valuation becomes `(x, 1)` after scaling, the other one
    /// is cleared to `(det/e², 0)`.
    pub fn canonicalize(&self, basis: &ProjMatrix) -> Result<TreeVertex> {
        let det = basis.det();
        if det.is_zero() {
            return Err(Error::SingularMatrix);
        }
        let vdet = val_p(&det, self.p).finite().expect("nonzero determinant");
        let (a, b, c, d) = (basis.a(), basis.b(), basis.c(), basis.d());
        let (pivot, other) = if val_p(d, self.p) <= val_p(c, self.p) {
            (d, b)
        } else {
            (c, a)
        };
        let vpivot = val_p(pivot, self.p).finite().expect("pivot is nonzero");
        Ok(self.vertex(vdet - 2 * vpivot, &(other / pivot)))
    }

    /// The `p + 1` neighbours: `p` upward, then the one downward.
    pub fn neighbors(&self, v: &TreeVertex) -> Vec<TreeVertex> {
        let step = self.p.pow(v.m);
        let mut out: Vec<TreeVertex> = (0..self.p.get())
            .map(|t| TreeVertex {
                m: v.m + 1,
                b: &v.b + &step * &Rational::from_int(t),
            })
            .collect();
        out.push(self.vertex(v.m - 1, &v.b));
        out
    }

    /// Height of the deepest common ancestor toward the end `∞`.
    fn meet_height(&self, u: &TreeVertex, v: &TreeVertex) -> i64 {
        let low = u.m.min(v.m);
        match val_p(&(&u.b - &v.b), self.p) {
            Valuation::Infinity => low,
            Valuation::Finite(k) => low.min(k),
        }
    }

    /// Graph distance `m₁ + m₂ − 2·min(m₁, m₂, val_p(b₁ − b₂))`.
    pub fn distance(&self, u: &TreeVertex, v: &TreeVertex) -> u64 {
        (u.m + v.m - 2 * self.meet_height(u, v)) as u64
    }

    /// Action of `g` on vertices by multiplying basis vectors.
    pub fn act(&self, g: &ProjMatrix, v: &TreeVertex) -> TreeVertex {
        self.canonicalize(&g.mul(&self.basis(v)))
            .expect("product of nonsingular matrices")
    }

    pub fn mobius_end(&self, g: &ProjMatrix, e: &TreeEnd) -> TreeEnd {
        g.apply(e)
    }

    pub fn height(&self, v: &TreeVertex) -> i64 {
        v.m
    }

    /// Breadth-first ball of the given radius, in visiting order, with
    /// distances.
    pub fn ball(&self, center: &TreeVertex, radius: u64) -> Vec<(TreeVertex, u64)> {
        let mut seen = HashSet::from([center.clone()]);
        let mut queue = VecDeque::from([(center.clone(), 0)]);
        let mut out = Vec::new();
        while let Some((v, d)) = queue.pop_front() {
            if d < radius {
                for w in self.neighbors(&v) {
                    if seen.insert(w.clone()) {
                        queue.push_back((w, d + 1));
                    }
                }
            }
            out.push((v, d));
        }
        out
    }

    pub fn line_between_ends(&self, e1: &TreeEnd, e2: &TreeEnd) -> Result<TreeLine> {
        if e1 == e2 {
            return Err(Error::EqualPoints);
        }
        let (first, second) = if e1 < e2 {
            (e1.clone(), e2.clone())
        } else {
            (e2.clone(), e1.clone())
        };
        Ok(TreeLine { first, second })
    }

    /// Confluence point of a line with two finite ends.
    pub fn confluence(&self, line: &TreeLine) -> Option<TreeVertex> {
        let (alpha, beta) = finite_pair(line)?;
        let nu = val_p(&(alpha - beta), self.p).finite().expect("distinct ends");
        Some(self.vertex(nu, alpha))
    }

    /// Vertices of `line` with height in `[lo, hi]`, walking from the first
    /// end to the second.
    pub fn line_vertices(&self, line: &TreeLine, lo: i64, hi: i64) -> Vec<TreeVertex> {
        match (&line.first, &line.second) {
            (BoundaryPoint::Finite(alpha), BoundaryPoint::Infinity) => {
                (lo..=hi).rev().map(|m| self.vertex(m, alpha)).collect()
            }
            (BoundaryPoint::Finite(alpha), BoundaryPoint::Finite(beta)) => {
                let nu = val_p(&(alpha - beta), self.p).finite().expect("distinct ends");
                let start = lo.max(nu + 1);
                let mut out: Vec<TreeVertex> =
                    (start..=hi).rev().map(|m| self.vertex(m, alpha)).collect();
                if lo <= nu && nu <= hi {
                    out.push(self.vertex(nu, alpha));
                }
                out.extend((start..=hi).map(|m| self.vertex(m, beta)));
                out
            }
            _ => unreachable!("ends are sorted and distinct"),
        }
    }

    /// Distance from `v` to the line `(α, ∞)`.
    fn dist_to_axis(&self, v: &TreeVertex, alpha: &Rational) -> (u64, i64) {
        let foot = match val_p(&(&v.b - alpha), self.p) {
            Valuation::Infinity => v.m,
            Valuation::Finite(k) => v.m.min(k),
        };
        ((v.m - foot) as u64, foot)
    }

    pub fn dist_to_line(&self, v: &TreeVertex, line: &TreeLine) -> u64 {
        self.foot(v, line).1
    }

    /// Nearest vertex of `line` to `v`, with its distance.
    pub fn foot(&self, v: &TreeVertex, line: &TreeLine) -> (TreeVertex, u64) {
        match (&line.first, &line.second) {
            (BoundaryPoint::Finite(alpha), BoundaryPoint::Infinity) => {
                let (d, h) = self.dist_to_axis(v, alpha);
                (self.vertex(h, alpha), d)
            }
            (BoundaryPoint::Finite(alpha), BoundaryPoint::Finite(beta)) => {
                let confluence = self.confluence(line).expect("finite ends");
                let nu = confluence.m;
                let ray = |end: &Rational| {
                    let (d, h) = self.dist_to_axis(v, end);
                    if h >= nu {
                        (self.vertex(h, end), d)
                    } else {
                        (confluence.clone(), self.distance(v, &confluence))
                    }
                };
                let (x, y) = (ray(alpha), ray(beta));
                if y.1 < x.1 {
                    y
                } else {
                    x
                }
            }
            _ => unreachable!("ends are sorted and distinct"),
        }
    }

    pub fn on_line(&self, v: &TreeVertex, line: &TreeLine) -> bool {
        self.dist_to_line(v, line) == 0
    }
}

fn finite_pair(line: &TreeLine) -> Option<(&Rational, &Rational)> {
    Some((line.first.as_finite()?, line.second.as_finite()?))
}

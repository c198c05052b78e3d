//! Horospheres `σ_α` of `H² × T_p`: one horoball per tree vertex, all based
//! at the same `α ∈ Q ∪ {∞}`.
//!
//! `σ_∞` has height `p^m·H` over the vertex `(m, b)`. For finite `α` the
//! fiber is transported from `σ_∞` by any `g ∈ PSL₂(Z[1/p])` with `g·∞ = α`:
//! `σ_α|_v = g·(σ_∞|_{g⁻¹v})`.

use num_integer::Integer;
use num_traits::One;
use serde::Serialize;

use crate::arith::{Prime, Rational};
use crate::error::{Error, Result};
use crate::hyperbolic::{
    check_packing, horoball_distance, horoball_gap, horoball_image, HoroDistance, Horoball,
};
use crate::matrix::{BoundaryPoint, ProjMatrix};
use crate::tree::{BtTree, TreeLine, TreeVertex};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Horosphere {
    base: BoundaryPoint,
    packing: Rational,
}

impl Horosphere {
    pub fn new(base: BoundaryPoint, packing: Rational) -> Result<Self> {
        check_packing(&packing)?;
        Ok(Horosphere { base, packing })
    }

    pub fn base(&self) -> &BoundaryPoint {
        &self.base
    }

    pub fn packing(&self) -> &Rational {
        &self.packing
    }

    /// The horoball of this horosphere over `v`.
    pub fn fiber(&self, tree: &BtTree, v: &TreeVertex) -> Horoball {
        match &self.base {
            BoundaryPoint::Infinity => top_fiber(tree.prime(), &self.packing, v),
            BoundaryPoint::Finite(_) => {
                let g = transporter_from_infinity(&self.base);
                self.fiber_via(tree, &g, v)
            }
        }
    }

    /// Fiber computed through an explicit transporter `g` with `g·∞ = base`.
    pub fn fiber_via(&self, tree: &BtTree, g: &ProjMatrix, v: &TreeVertex) -> Horoball {
        debug_assert_eq!(g.apply(&BoundaryPoint::Infinity), self.base);
        let pulled = tree.act(&g.inverse(), v);
        horoball_image(g, &top_fiber(tree.prime(), &self.packing, &pulled))
    }
}

fn top_fiber(p: Prime, h: &Rational, v: &TreeVertex) -> Horoball {
    Horoball::new(BoundaryPoint::Infinity, p.pow(v.height()) * h).expect("positive height")
}

/// A `PSL₂(Z)` matrix sending `∞` to `α`: first column `(a, c)` for
/// `α = a/c` in lowest terms, completed to determinant one.
pub fn transporter_from_infinity(alpha: &BoundaryPoint) -> ProjMatrix {
    match alpha {
        BoundaryPoint::Infinity => ProjMatrix::identity(),
        BoundaryPoint::Finite(x) => {
            let (a, c) = (x.numer().clone(), x.denom().clone());
            // a·y − x·c = 1
            let e = a.extended_gcd(&c);
            debug_assert!(e.gcd.is_one());
            let (y, xb) = (e.x, -e.y);
            debug_assert!((&a * &y - &xb * &c).is_one());
            ProjMatrix::new(
                Rational::from_int(a),
                Rational::from_int(xb),
                Rational::from_int(c),
                Rational::from_int(y),
            )
            .expect("determinant one")
        }
    }
}

fn distinct(alpha: &BoundaryPoint, beta: &BoundaryPoint) -> Result<()> {
    if alpha == beta {
        Err(Error::EqualPoints)
    } else {
        Ok(())
    }
}

/// Argument of the fiber distance between `σ_α` and `σ_β` over `v`.
pub fn fiber_gap(
    tree: &BtTree,
    alpha: &BoundaryPoint,
    beta: &BoundaryPoint,
    v: &TreeVertex,
    h: &Rational,
) -> Result<Rational> {
    distinct(alpha, beta)?;
    let sa = Horosphere::new(alpha.clone(), h.clone())?;
    let sb = Horosphere::new(beta.clone(), h.clone())?;
    horoball_gap(&sa.fiber(tree, v), &sb.fiber(tree, v))
}

pub fn fiber_distance(
    tree: &BtTree,
    alpha: &BoundaryPoint,
    beta: &BoundaryPoint,
    v: &TreeVertex,
    h: &Rational,
) -> Result<HoroDistance> {
    distinct(alpha, beta)?;
    let sa = Horosphere::new(alpha.clone(), h.clone())?;
    let sb = Horosphere::new(beta.clone(), h.clone())?;
    horoball_distance(&sa.fiber(tree, v), &sb.fiber(tree, v))
}

/// The tree line along which `σ_α` and `σ_β` stay closest.
pub fn closeness_line(tree: &BtTree, alpha: &BoundaryPoint, beta: &BoundaryPoint) -> Result<TreeLine> {
    tree.line_between_ends(alpha, beta)
}

/// Multiplicative growth of the fiber-distance argument per unit of tree
/// distance from the closeness line.
pub fn growth_factor(p: Prime) -> Rational {
    p.pow(2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfileRow {
    pub vertex: TreeVertex,
    /// Tree distance to the closeness line.
    pub k: u64,
    pub argument: Rational,
}

/// Fiber distances over the ball of `radius` around the vertex of the
/// closeness line nearest the basepoint, in breadth-first order.
pub fn growth_profile(
    tree: &BtTree,
    alpha: &BoundaryPoint,
    beta: &BoundaryPoint,
    radius: u64,
    h: &Rational,
) -> Result<Vec<ProfileRow>> {
    distinct(alpha, beta)?;
    let line = closeness_line(tree, alpha, beta)?;
    let center = tree.foot(&tree.root(), &line).0;
    let sa = Horosphere::new(alpha.clone(), h.clone())?;
    let sb = Horosphere::new(beta.clone(), h.clone())?;
    tree.ball(&center, radius)
        .into_iter()
        .map(|(v, _)| {
            let argument = horoball_gap(&sa.fiber(tree, &v), &sb.fiber(tree, &v))?;
            Ok(ProfileRow {
                k: tree.dist_to_line(&v, &line),
                vertex: v,
                argument,
            })
        })
        .collect()
}

/// A row breaking the growth law `argument = min · p^{2k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrowthViolation {
    pub row: ProfileRow,
    pub expected: Rational,
}

/// Checks every row against `base · growth_factor^k`, where `base` is the
/// argument on the closeness line.
pub fn check_growth_law(p: Prime, rows: &[ProfileRow]) -> std::result::Result<Rational, GrowthViolation> {
    let base = rows
        .iter()
        .filter(|r| r.k == 0)
        .map(|r| r.argument.clone())
        .min()
        .expect("profile contains the closeness line");
    let factor = growth_factor(p);
    for row in rows {
        let expected = &base * &factor.pow(row.k as i64).expect("nonzero");
        if row.argument != expected {
            return Err(GrowthViolation {
                row: row.clone(),
                expected,
            });
        }
    }
    Ok(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn pt(s: &str) -> BoundaryPoint {
        s.parse().unwrap()
    }

    fn tree(p: u64) -> BtTree {
        BtTree::new(Prime::new(p).unwrap())
    }

    #[test]
    fn top_fiber_examples() {
        let t = tree(3);
        let h = q("2");
        let s = Horosphere::new(pt("inf"), h.clone()).unwrap();
        assert_eq!(s.fiber(&t, &t.root()), Horoball::new(pt("inf"), h.clone()).unwrap());
        // M·L0 = (2(S+T), s·p^{2T}) carries height p^{2(S+T)} H
        let (ss, big_s, big_t) = (2, 2, 1);
        let x = t.vertex(2 * (big_s + big_t), &(Rational::from_int(ss) * t.prime().pow(2 * big_t)));
        assert_eq!(
            s.fiber(&t, &x),
            Horoball::new(pt("inf"), t.prime().pow(2 * (big_s + big_t)) * &h).unwrap()
        );
    }

    #[test]
    fn finite_fiber_at_basepoint() {
        let t = tree(2);
        let s0 = Horosphere::new(pt("0"), q("2")).unwrap();
        assert_eq!(s0.fiber(&t, &t.root()), Horoball::new(pt("0"), q("1/2")).unwrap());
        let rot = ProjMatrix::from_ints(0, -1, 1, 0).unwrap();
        assert_eq!(s0.fiber_via(&t, &rot, &t.root()), s0.fiber(&t, &t.root()));
    }

    #[test]
    fn transporters_are_unimodular() {
        for s in ["0", "1", "-1", "1/2", "-7/3", "22/15", "inf"] {
            let g = transporter_from_infinity(&pt(s));
            assert_eq!(g.det(), q("1"));
            assert_eq!(g.apply(&BoundaryPoint::Infinity), pt(s));
            assert!(g.entries().iter().all(|e| e.is_integer()));
        }
    }

    #[test]
    fn fiber_distance_examples() {
        let t = tree(2);
        for h in ["3/2", "2", "5"] {
            let h = q(h);
            let d = fiber_distance(&t, &pt("0"), &pt("inf"), &t.root(), &h).unwrap();
            assert_eq!(d.log_dist().unwrap().argument(), &h.square());
        }
        assert!(fiber_distance(&t, &pt("1"), &pt("1"), &t.root(), &q("2")).is_err());
        assert!(fiber_distance(&t, &pt("0"), &pt("1"), &t.root(), &q("1")).is_err());
    }

    #[test]
    fn paper_vertices_follow_the_matrix_chain() {
        // Independent route: σ_0 at M·L0 equals M·N·(σ_0|L0) for the
        // explicit matrices N ∈ PSL₂(Z) and M upper triangular.
        for p in [2u64, 3] {
            let t = tree(p);
            let pr = t.prime();
            let h = q("2");
            for (s, big_s, big_t) in [(1i64, 1i64, 0i64), (1, 2, 1), (5, 1, 0)] {
                if (s as u64).is_multiple_of(p) {
                    continue;
                }
                let d = pr.int_pow(2 * big_s as u32);
                let sb = BigInt::from(s);
                // a·p^{2S} + s·b = 1
                let e = d.extended_gcd(&sb);
                let n = ProjMatrix::new(
                    Rational::from_int(e.x.clone()),
                    Rational::from_int(-sb.clone()),
                    Rational::from_int(e.y.clone()),
                    Rational::from_int(d.clone()),
                )
                .unwrap();
                assert_eq!(n.det(), q("1"));
                let m = ProjMatrix::new(
                    pr.pow(big_s + big_t),
                    Rational::from_int(s) * pr.pow(big_t - big_s),
                    Rational::zero(),
                    pr.pow(-(big_s + big_t)),
                )
                .unwrap();
                let beta = BoundaryPoint::Finite(Rational::from_int(-s) / pr.pow(2 * big_s));
                assert_eq!(n.apply(&pt("0")), beta);
                assert_eq!(m.apply(&beta), pt("0"));

                let sigma0 = Horosphere::new(pt("0"), h.clone()).unwrap();
                let sigma_beta_root = horoball_image(&n, &sigma0.fiber(&t, &t.root()));
                assert_eq!(sigma_beta_root.size(), &(pr.pow(-4 * big_s) / &h));
                let chain = horoball_image(&m, &sigma_beta_root);
                let ml0 = t.act(&m, &t.root());
                assert_eq!(sigma0.fiber(&t, &ml0), chain);

                let gap = fiber_gap(&t, &pt("0"), &pt("inf"), &ml0, &h).unwrap();
                assert_eq!(gap, pr.pow(4 * big_s) * h.square());
            }
        }
    }

    #[test]
    fn closeness_lines() {
        let t = tree(2);
        let l = closeness_line(&t, &pt("0"), &pt("inf")).unwrap();
        assert_eq!(l, t.line_between_ends(&pt("inf"), &pt("0")).unwrap());
        assert_ne!(
            closeness_line(&t, &pt("0"), &pt("1")).unwrap(),
            closeness_line(&t, &pt("0"), &pt("2")).unwrap()
        );
        let l12 = closeness_line(&t, &pt("1"), &pt("2")).unwrap();
        assert_eq!(t.confluence(&l12).unwrap().height(), 0);
        assert!(closeness_line(&t, &pt("3"), &pt("3")).is_err());
    }

    #[test]
    fn profile_on_the_diagonal() {
        let t = tree(3);
        let rows = growth_profile(&t, &pt("0"), &pt("inf"), 4, &q("2")).unwrap();
        assert_eq!(rows[0].vertex, t.root());
        for r in rows.iter().filter(|r| r.k == 0) {
            assert_eq!(r.argument, q("4"));
        }
        assert_eq!(check_growth_law(t.prime(), &rows), Ok(q("4")));
    }
}

//! Small oracle checks run by the command line `--selftest` flags.

use std::collections::{HashMap, VecDeque};

use num_bigint::BigInt;
use serde::Serialize;

use crate::arith::{Prime, Rational};
use crate::bs::{bs_commensurable, phi_embed, BsWord};
use crate::comm::{conjugate, denominator_profile, diagonal_rescaler, standard_generators, transporter};
use crate::horosphere::{check_growth_law, growth_profile};
use crate::matrix::{BoundaryPoint, ProjMatrix};
use crate::rigidity::{DiagonalLattice, FnMap, PlemmaOptions, Window};
use crate::tree::BtTree;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
}

fn check(name: &'static str, passed: bool) -> Check {
    Check { name, passed }
}

fn q(s: &str) -> Rational {
    s.parse().expect("literal")
}

fn pt(s: &str) -> BoundaryPoint {
    s.parse().expect("literal")
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn tree(p: Prime) -> Vec<Check> {
    let t = BtTree::new(p);
    let ball = t.ball(&t.root(), 3);
    let mut bfs: HashMap<_, u64> = HashMap::from([(t.root(), 0)]);
    let mut queue = VecDeque::from([t.root()]);
    while let Some(v) = queue.pop_front() {
        let d = bfs[&v];
        if d == 3 {
            continue;
        }
        for w in t.neighbors(&v) {
            if !bfs.contains_key(&w) {
                bfs.insert(w.clone(), d + 1);
                queue.push_back(w);
            }
        }
    }
    let distances = ball
        .iter()
        .all(|(u, _)| ball.iter().all(|(v, _)| {
            bfs.contains_key(u) && {
                let path = t.distance(u, v);
                path == t.distance(v, u) && (u != v || path == 0)
            }
        }))
        && ball.iter().all(|(v, d)| bfs.get(v) == Some(d));
    let n = p.get();
    let expected = 1 + (n + 1) * (1 + n + n * n);
    let g = ProjMatrix::from_ints(1, 1, 0, 1).expect("unipotent");
    let action = ball.iter().all(|(u, _)| {
        ball.iter()
            .all(|(v, _)| t.distance(&t.act(&g, u), &t.act(&g, v)) == t.distance(u, v))
    });
    vec![
        check("ball size matches (p+1)p^(r-1) shells", ball.len() as u64 == expected),
        check("closed-form distance agrees with BFS", distances),
        check("translation acts by isometries", action),
    ]
}

pub fn horo(p: Prime) -> Vec<Check> {
    let t = BtTree::new(p);
    let h = q("2");
    let packing = growth_profile(&t, &pt("0"), &pt("inf"), 0, &h)
        .map(|rows| rows[0].argument == h.square())
        .unwrap_or(false);
    let law = [("0", "inf"), ("0", "1"), ("1/2", "3")].iter().all(|(a, b)| {
        growth_profile(&t, &pt(a), &pt(b), 3, &h)
            .map(|rows| check_growth_law(p, &rows).is_ok())
            .unwrap_or(false)
    });
    vec![
        check("fiber distance over the basepoint is log H^2", packing),
        check("fiber distances grow by p^2 per edge", law),
    ]
}

pub fn bs(p: Prime) -> Vec<Check> {
    let n = (p.get() * p.get()) as i64;
    let relation = phi_embed(&"aba⁻¹".parse::<BsWord>().expect("word"), p)
        == phi_embed(&"b".parse::<BsWord>().expect("word"), p).pow(n);
    let oracle = (2..=40u64).all(|m| {
        (2..=40u64).all(|k| {
            let brute = (2..=m.max(k)).any(|r| {
                let power = |mut x: u64| {
                    while x.is_multiple_of(r) {
                        x /= r;
                    }
                    x == 1
                };
                power(m) && power(k)
            });
            bs_commensurable(m, k) == Ok(brute)
        })
    });
    vec![
        check("a b a^-1 maps to b^(p^2)", relation),
        check("commensurability matches integer roots on [2,40]^2", oracle),
    ]
}

pub fn rig(p: Prime) -> Vec<Check> {
    let lat = DiagonalLattice::new(p);
    let one = BigInt::from(1);
    let threshold = if p.get() == 2 {
        lat.s_threshold(&q("1"), &one, &q("1"))
            .map(|t| t.s0 == 4)
            .unwrap_or(false)
    } else {
        lat.s_threshold(&q("1"), &one, &q("1")).is_ok()
    };
    let map = FnMap::new(|x: &Rational| x * &q("-3"), Rational::from_int(3));
    let affine = lat
        .verify_plemma(&map, &one, &Window::new(2, 1), &PlemmaOptions::default())
        .map(|r| r.passed())
        .unwrap_or(false);
    vec![
        check("threshold for the index set {±1}", threshold),
        check("a linear map has no parallelogram violations", affine),
    ]
}

pub fn comm(p: Prime) -> Vec<Check> {
    let transports = [("1", "0"), ("inf", "2"), ("-1/3", "inf")].iter().all(|(a, b)| {
        transporter(&pt(a), &pt(b))
            .map(|g| g.apply(&pt(a)) == pt("0") && g.apply(&pt(b)) == pt("inf"))
            .unwrap_or(false)
    });
    let g = diagonal_rescaler(&q("2")).expect("positive");
    let [a, b] = standard_generators(p);
    let hom = conjugate(&g, &a.mul(&b)) == conjugate(&g, &a).mul(&conjugate(&g, &b));
    let prof = denominator_profile(&g, &[a, b], 3, p)
        .map(|prof| prof.stable)
        .unwrap_or(false);
    vec![
        check("transporters send the pair to (0, inf)", transports),
        check("conjugation is multiplicative", hom),
        check("rescaler denominator profile stabilizes", prof),
    ]
}

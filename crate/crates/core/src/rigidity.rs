//! Rigidity machinery on the diagonal lattice `Δ_Q ⊂ R × Q_p`.
//!
//! A rational `a` stands for the diagonal point `(a, a)`: its archimedean
//! size is `|a|` and its p-adic size is `abs_p(a)`. The cyclic group `H`
//! generated by `diag(p, 1/p)` acts on boundary points as `x ↦ p²x`.
//!
//! Diameters use the max of the two metrics. `δ_H(S)` is the least
//! diameter over the `H`-orbit of `S`; the archimedean part grows and the
//! p-adic part shrinks under the generator, so the minimum sits at the
//! integer bracketing their balance point.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::BufRead;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith::{
    abs_p, ceil_log, coprime_to, floor_log, prime_to_p_denominator, val_p, Prime,
    Rational,
};
use crate::error::{Error, Result};

/// A point of `Δ_Q`, read diagonally.
pub type DeltaPoint = Rational;

/// A finite subset of `Δ_Q`, optionally declared to lie in `(1/M)·Z[1/p]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeltaSet {
    points: BTreeSet<DeltaPoint>,
    height_class: Option<BigInt>,
}

impl DeltaSet {
    pub fn new(points: impl IntoIterator<Item = DeltaPoint>) -> Result<Self> {
        let points: BTreeSet<_> = points.into_iter().collect();
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        Ok(DeltaSet {
            points,
            height_class: None,
        })
    }

    /// Declares bounded height `M`: every point times `M` has a pure
    /// `p`-power denominator.
    pub fn with_height(self, m: BigInt, p: Prime) -> Result<Self> {
        if !coprime_to(&m, p) || m.is_negative() {
            return Err(Error::NotCoprime {
                what: "height class M",
                value: m.to_string(),
                p: p.get(),
            });
        }
        let scale = Rational::from_int(m.clone());
        if let Some(x) = self
            .points
            .iter()
            .find(|x| !prime_to_p_denominator(&(*x * &scale), p).is_one())
        {
            return Err(Error::InvalidArgument(format!(
                "{x} does not lie in (1/{m})·Z[1/{p}]"
            )));
        }
        Ok(DeltaSet {
            height_class: Some(m),
            ..self
        })
    }

    pub fn points(&self) -> impl Iterator<Item = &DeltaPoint> {
        self.points.iter()
    }

    pub fn height_class(&self) -> Option<&BigInt> {
        self.height_class.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A quadruple `[a b; c d]` with `a − c = b − d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Parallelogram {
    pub a: DeltaPoint,
    pub b: DeltaPoint,
    pub c: DeltaPoint,
    pub d: DeltaPoint,
}

impl Parallelogram {
    pub fn new(a: DeltaPoint, b: DeltaPoint, c: DeltaPoint, d: DeltaPoint) -> Result<Self> {
        if !is_parallelogram(&a, &b, &c, &d) {
            return Err(Error::InvalidArgument(format!(
                "[{a} {b}; {c} {d}] is not a parallelogram"
            )));
        }
        Ok(Parallelogram { a, b, c, d })
    }

    /// The parallelogram spanned at `a` by the sides `u = b − a`, `v = c − a`.
    pub fn spanned(a: &DeltaPoint, u: &DeltaPoint, v: &DeltaPoint) -> Self {
        Parallelogram {
            a: a.clone(),
            b: a + u,
            c: a + v,
            d: a + u + v,
        }
    }

    pub fn map(&self, f: impl Fn(&DeltaPoint) -> DeltaPoint) -> [DeltaPoint; 4] {
        [f(&self.a), f(&self.b), f(&self.c), f(&self.d)]
    }
}

impl fmt::Display for Parallelogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

pub fn is_parallelogram(a: &DeltaPoint, b: &DeltaPoint, c: &DeltaPoint, d: &DeltaPoint) -> bool {
    a - c == b - d
}

/// One orbit representative `a / (k·p^r)` of the fundamental set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct IndexEntry {
    pub a: i64,
    pub r: u8,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Threshold {
    pub b1: i64,
    pub b2: i64,
    pub b3: i64,
    pub b4: i64,
    pub r: i64,
    pub s0: u64,
    pub index: Vec<IndexEntry>,
}

/// Calculations on `Δ_Q` for a fixed prime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiagonalLattice {
    p: Prime,
}

impl DiagonalLattice {
    pub fn new(p: Prime) -> Self {
        DiagonalLattice { p }
    }

    pub fn prime(&self) -> Prime {
        self.p
    }

    /// `x ↦ p^{2k}·x`, the action of `diag(p, 1/p)^k`.
    pub fn scale_act(&self, k: i64, x: &DeltaPoint) -> DeltaPoint {
        x * &self.p.pow(2 * k)
    }

    /// Max over pairs of `max(|x − y|, abs_p(x − y))`.
    pub fn diam(&self, s: &DeltaSet) -> Rational {
        let (arch, padic) = self.spreads(s);
        arch.max(padic)
    }

    /// Archimedean and p-adic diameters of a set.
    fn spreads(&self, s: &DeltaSet) -> (Rational, Rational) {
        let lo = s.points.first().expect("nonempty");
        let hi = s.points.last().expect("nonempty");
        let arch = hi - lo;
        let pts: Vec<&Rational> = s.points.iter().collect();
        let mut padic = Rational::zero();
        for (i, x) in pts.iter().enumerate() {
            for y in &pts[i + 1..] {
                padic = padic.max(abs_p(&(*x - *y), self.p));
            }
        }
        (arch, padic)
    }

    fn balanced(&self, arch: &Rational, padic: &Rational) -> Rational {
        if arch.is_zero() {
            return Rational::zero();
        }
        let base = self.p.pow(4);
        let k = floor_log(&(padic / arch), &base);
        let at = |k: i64| {
            let s = self.p.pow(2 * k);
            (&s * arch).max(padic / &s)
        };
        at(k).min(at(k + 1))
    }

    /// `δ_H(S) = min_k diam(p^{2k}·S)`.
    pub fn delta_h(&self, s: &DeltaSet) -> Rational {
        let (arch, padic) = self.spreads(s);
        self.balanced(&arch, &padic)
    }

    /// `δ_H({x, y})`.
    pub fn delta_pair(&self, x: &DeltaPoint, y: &DeltaPoint) -> Rational {
        let d = x - y;
        self.balanced(&d.abs(), &abs_p(&d, self.p))
    }

    /// `δ(a ∪ b) + δ(a ∪ c)`.
    pub fn per(&self, par: &Parallelogram) -> Rational {
        self.delta_pair(&par.a, &par.b) + self.delta_pair(&par.a, &par.c)
    }

    /// `|ν(b − a) − ν(c − a)|`, or `None` for a degenerate side.
    pub fn shape(&self, par: &Parallelogram) -> Option<u64> {
        let u = val_p(&(&par.b - &par.a), self.p).finite()?;
        let v = val_p(&(&par.c - &par.a), self.p).finite()?;
        Some(u.abs_diff(v))
    }

    /// Orbit representatives `a/(k·p^r)`, `p ∤ a`, `r ∈ {0, 1}`, of the
    /// nonzero `x ∈ (1/k)·Z[1/p]` with `δ({0, x}) ≤ D`, sorted.
    ///
    /// `|x|·abs_p(x) = |a|/k` and `δ({0, x}) ≥ √(|x|·abs_p(x))`, so
    /// `|a| ≤ k·D²` bounds the search.
    pub fn fundamental_set(&self, k: &BigInt, bound: &Rational) -> Result<Vec<IndexEntry>> {
        self.check_class(k, "k")?;
        if !bound.is_positive() {
            return Err(Error::NonPositive {
                what: "D",
                value: bound.clone(),
            });
        }
        let kr = Rational::from_int(k.clone());
        let limit = (&kr * &bound.square()).floor().to_i64().ok_or(Error::Overflow)?;
        let zero = Rational::zero();
        let mut out = Vec::new();
        for a in -limit..=limit {
            if a == 0 || a.rem_euclid(self.p.get() as i64) == 0 {
                continue;
            }
            for r in 0..=1u8 {
                let x = Rational::from_int(a) / (&kr * &self.p.pow(r as i64));
                if self.delta_pair(&zero, &x) <= *bound {
                    out.push(IndexEntry { a, r });
                }
            }
        }
        Ok(out)
    }

    fn check_class(&self, k: &BigInt, what: &'static str) -> Result<()> {
        if k.is_positive() && coprime_to(k, self.p) {
            Ok(())
        } else {
            Err(Error::NotCoprime {
                what,
                value: k.to_string(),
                p: self.p.get(),
            })
        }
    }

    /// The shape threshold `s₀` for a `K₀`-bilipschitz map with image class
    /// `k` and adaptation bound `D`.
    pub fn s_threshold(&self, k0: &Rational, k: &BigInt, bound: &Rational) -> Result<Threshold> {
        if *k0 < Rational::one() {
            return Err(Error::InvalidArgument(format!("K0 must be at least 1, got {k0}")));
        }
        let p = self.p;
        let r = ceil_log(k0, &p.pow(1));
        let index = self.fundamental_set(k, bound)?;
        if index.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let values: Vec<i64> = index
            .iter()
            .map(|e| e.a)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let b1 = values.last().unwrap() - values.first().unwrap();
        let b2 = *values.last().unwrap();
        let b3 = max_pair_valuation(&values, p.get()).ok_or(Error::DegenerateBound("B3"))?;
        let b4 = max_triple_valuation(&values, p.get()).ok_or(Error::DegenerateBound("B4"))?;
        if b1 + b2 <= 0 {
            return Err(Error::DegenerateBound("B1 + B2"));
        }
        let log_term = ceil_log(&Rational::from_int(b1 + b2), &p.pow(1));
        let s0 = (2 * log_term).max(3 * b3 * b3).max(2 * b4) + 2 * r;
        Ok(Threshold {
            b1,
            b2,
            b3,
            b4,
            r,
            s0: s0.max(0) as u64,
            index,
        })
    }
}

/// Integers in `[−reach, reach]` as a membership table.
struct Marks {
    reach: i64,
    hit: Vec<bool>,
}

impl Marks {
    fn new(reach: i64) -> Self {
        Marks {
            reach,
            hit: vec![false; (2 * reach + 1) as usize],
        }
    }

    fn set(&mut self, n: i64) {
        self.hit[(n + self.reach) as usize] = true;
    }

    fn members(&self) -> impl Iterator<Item = i64> + '_ {
        self.hit
            .iter()
            .enumerate()
            .filter(|(_, h)| **h)
            .map(move |(i, _)| i as i64 - self.reach)
    }

    fn max_valuation(&self, p: u64) -> Option<i64> {
        self.members()
            .filter(|n| *n != 0)
            .map(|mut n| {
                let mut e = 0;
                while n % p as i64 == 0 {
                    n /= p as i64;
                    e += 1;
                }
                e
            })
            .max()
    }
}

/// Largest `ν(x − y)` or `ν(x + y)` over `values`, skipping zero arguments.
fn max_pair_valuation(values: &[i64], p: u64) -> Option<i64> {
    let top = values.iter().map(|v| v.abs()).max()?;
    let mut marks = Marks::new(2 * top);
    for x in values {
        for y in values {
            marks.set(x - y);
            marks.set(x + y);
        }
    }
    marks.max_valuation(p)
}

/// Largest `ν(x + y − z)` over `values`, skipping zero arguments.
fn max_triple_valuation(values: &[i64], p: u64) -> Option<i64> {
    let top = values.iter().map(|v| v.abs()).max()?;
    let mut diffs = Marks::new(2 * top);
    for x in values {
        for z in values {
            diffs.set(x - z);
        }
    }
    let diffs: Vec<i64> = diffs.members().collect();
    let mut marks = Marks::new(3 * top);
    for y in values {
        for d in &diffs {
            marks.set(y + d);
        }
    }
    marks.max_valuation(p)
}

/// A boundary map on `Δ_Q` together with its declared constants.
pub trait DeltaMap {
    fn image(&self, x: &DeltaPoint) -> Option<DeltaPoint>;

    /// Declared bilipschitz constant `K₀`.
    fn bilipschitz(&self) -> &Rational;

    /// Declared `k` with image in `(1/k)·Z[1/p]`; derived from the grid
    /// when absent.
    fn image_class(&self) -> Option<&BigInt> {
        None
    }

    /// Declared adaptation bound `D`; derived from the grid when absent.
    fn adaptation_bound(&self) -> Option<&Rational> {
        None
    }
}

/// A map given by a finite table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TabulatedMap {
    table: BTreeMap<DeltaPoint, DeltaPoint>,
    k0: Rational,
    image_class: Option<BigInt>,
    adaptation: Option<Rational>,
}

#[derive(Serialize, Deserialize)]
struct TableLine {
    x: Rational,
    fx: Rational,
}

impl TabulatedMap {
    pub fn new(table: BTreeMap<DeltaPoint, DeltaPoint>, k0: Rational) -> Result<Self> {
        if k0 < Rational::one() {
            return Err(Error::InvalidArgument(format!("K0 must be at least 1, got {k0}")));
        }
        let image: BTreeSet<&Rational> = table.values().collect();
        if image.len() != table.len() {
            return Err(Error::InvalidArgument("tabulated map is not injective".into()));
        }
        Ok(TabulatedMap {
            table,
            k0,
            image_class: None,
            adaptation: None,
        })
    }

    pub fn from_fn(
        points: impl IntoIterator<Item = DeltaPoint>,
        f: impl Fn(&DeltaPoint) -> DeltaPoint,
        k0: Rational,
    ) -> Result<Self> {
        TabulatedMap::new(points.into_iter().map(|x| (f(&x), x)).map(|(fx, x)| (x, fx)).collect(), k0)
    }

    /// Reads JSON lines `{"x": "num/den", "fx": "num/den"}`; blank lines
    /// are skipped.
    pub fn from_json_lines(reader: impl BufRead, k0: Rational) -> Result<Self> {
        let mut table = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let row: TableLine = serde_json::from_str(&line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
            if table.insert(row.x.clone(), row.fx).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate x = {}", i + 1, row.x)));
            }
        }
        TabulatedMap::new(table, k0)
    }

    pub fn to_json_lines(&self) -> String {
        self.table
            .iter()
            .map(|(x, fx)| format!("{{\"x\":\"{x}\",\"fx\":\"{fx}\"}}\n"))
            .collect()
    }

    pub fn declare_image_class(mut self, k: BigInt) -> Self {
        self.image_class = Some(k);
        self
    }

    pub fn declare_adaptation_bound(mut self, d: Rational) -> Self {
        self.adaptation = Some(d);
        self
    }

    /// `x ↦ φ(x) − φ(0)`.
    pub fn normalized(&self) -> Result<Self> {
        let shift = self
            .table
            .get(&Rational::zero())
            .ok_or_else(|| Error::MissingPoint(Rational::zero()))?
            .clone();
        Ok(TabulatedMap {
            table: self.table.iter().map(|(x, y)| (x.clone(), y - &shift)).collect(),
            ..self.clone()
        })
    }

    pub fn table(&self) -> &BTreeMap<DeltaPoint, DeltaPoint> {
        &self.table
    }
}

impl DeltaMap for TabulatedMap {
    fn image(&self, x: &DeltaPoint) -> Option<DeltaPoint> {
        self.table.get(x).cloned()
    }
    fn bilipschitz(&self) -> &Rational {
        &self.k0
    }
    fn image_class(&self) -> Option<&BigInt> {
        self.image_class.as_ref()
    }
    fn adaptation_bound(&self) -> Option<&Rational> {
        self.adaptation.as_ref()
    }
}

/// A map given by a function, defined everywhere.
pub struct FnMap<F> {
    f: F,
    k0: Rational,
}

impl<F: Fn(&DeltaPoint) -> DeltaPoint> FnMap<F> {
    pub fn new(f: F, k0: Rational) -> Self {
        FnMap { f, k0 }
    }
}

impl<F: Fn(&DeltaPoint) -> DeltaPoint> DeltaMap for FnMap<F> {
    fn image(&self, x: &DeltaPoint) -> Option<DeltaPoint> {
        Some((self.f)(x))
    }
    fn bilipschitz(&self) -> &Rational {
        &self.k0
    }
}

/// Smallest `K₀ ≥ 1` for which `x ↦ αx` is `K₀`-bilipschitz on both `R`
/// and `Q_p`.
pub fn scaling_bilipschitz(alpha: &Rational, p: Prime) -> Rational {
    let arch = alpha.abs();
    let padic = abs_p(alpha, p);
    [arch.recip().unwrap(), padic.recip().unwrap(), arch, padic]
        .into_iter()
        .fold(Rational::one(), Rational::max)
}

/// The finite grid `(1/L)·Z[1/p] ∩ [−p^w, p^w]` cut off at p-adic depth
/// `E`: the points `n / (L·p^E)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub bound_exp: u32,
    pub depth: u32,
}

impl Window {
    pub fn new(bound_exp: u32, depth: u32) -> Self {
        Window { bound_exp, depth }
    }

    /// The grid as `(scale, half_width)`: point `i` is `i / scale` with
    /// `|i| ≤ half_width`.
    fn lattice(&self, p: Prime, l: &BigInt) -> Result<(BigInt, i64)> {
        let scale = l * p.int_pow(self.depth);
        let half = (&scale * p.int_pow(self.bound_exp)).to_i64().ok_or(Error::Overflow)?;
        Ok((scale, half))
    }

    pub fn points(&self, p: Prime, l: &BigInt) -> Result<Vec<DeltaPoint>> {
        let (scale, half) = self.lattice(p, l)?;
        Ok((-half..=half)
            .map(|i| Rational::new(i, scale.clone()).expect("positive scale"))
            .collect())
    }
}

/// Knobs for the parallelogram verifier.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlemmaOptions {
    /// Perimeter bound; the denominator class `L` when absent.
    pub perimeter_bound: Option<Rational>,
    /// Added to `s₀` before filtering shapes.
    pub s0_increment: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PlemmaReport {
    pub perimeter_bound: Rational,
    pub image_class: String,
    pub adaptation_bound: Rational,
    /// `None` when no parallelogram meets the perimeter bound at all.
    pub threshold: Option<Threshold>,
    pub effective_s0: Option<u64>,
    pub checked: u64,
    pub violations: Vec<Parallelogram>,
}

impl PlemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A grid with the map's values tabulated along it.
struct GridImage {
    scale: BigInt,
    half: i64,
    values: Vec<DeltaPoint>,
}

impl GridImage {
    fn build(map: &impl DeltaMap, p: Prime, l: &BigInt, window: &Window) -> Result<Self> {
        let (scale, half) = window.lattice(p, l)?;
        let values = (-half..=half)
            .map(|i| {
                let x = Rational::new(i, scale.clone()).expect("positive scale");
                map.image(&x).ok_or(Error::MissingPoint(x))
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = GridImage { scale, half, values };
        let zero = grid.at(0);
        if !zero.is_zero() {
            return Err(Error::NotNormalized(zero.clone()));
        }
        Ok(grid)
    }

    fn at(&self, i: i64) -> &DeltaPoint {
        &self.values[(i + self.half) as usize]
    }

    fn point(&self, i: i64) -> DeltaPoint {
        Rational::new(i, self.scale.clone()).expect("positive scale")
    }

    /// Indices `i` with `i + offset` also on the grid.
    fn shifted_range(&self, offsets: &[i64]) -> std::ops::RangeInclusive<i64> {
        let lo = offsets.iter().copied().min().unwrap_or(0).min(0);
        let hi = offsets.iter().copied().max().unwrap_or(0).max(0);
        (-self.half - lo)..=(self.half - hi)
    }

    fn image_class(&self, p: Prime) -> BigInt {
        self.values
            .iter()
            .fold(BigInt::one(), |acc, y| acc.lcm(&prime_to_p_denominator(y, p)))
    }
}

/// A grid difference `u` with `δ({0, u})` and `ν(u)`.
#[derive(Clone, Debug)]
struct Side {
    offset: i64,
    value: Rational,
    delta: Rational,
    val: i64,
}

impl DiagonalLattice {
    /// Nonzero grid differences `u = a·p^e/L` with `δ({0, u}) ≤ bound`.
    fn sides(&self, l: &BigInt, window: &Window, bound: &Rational) -> Result<Vec<Side>> {
        let p = self.p;
        let lr = Rational::from_int(l.clone());
        let limit = (&lr * &bound.square()).floor().to_i64().ok_or(Error::Overflow)?;
        let reach = Rational::from_int(2) * p.pow(window.bound_exp as i64);
        let scale = Rational::from_int(l * p.int_pow(window.depth));
        let zero = Rational::zero();
        let mut out = Vec::new();
        for a in -limit..=limit {
            if a == 0 || a.rem_euclid(p.get() as i64) == 0 {
                continue;
            }
            let mut e = -(window.depth as i64);
            loop {
                let u = Rational::from_int(a) * p.pow(e) / &lr;
                if u.abs() > reach {
                    break;
                }
                let delta = self.delta_pair(&zero, &u);
                if delta <= *bound {
                    let offset = (&u * &scale).numer().to_i64().ok_or(Error::Overflow)?;
                    out.push(Side {
                        offset,
                        value: u,
                        delta,
                        val: e,
                    });
                }
                e += 1;
            }
        }
        out.sort_by_key(|s| s.offset);
        Ok(out)
    }

    /// Max of `δ({φ(x), φ(x + u)})` over grid pairs with `u` a side.
    fn adaptation(&self, grid: &GridImage, sides: &[Side]) -> Rational {
        let mut cache: HashMap<Rational, Rational> = HashMap::new();
        let zero = Rational::zero();
        let mut best = Rational::zero();
        for side in sides.iter().filter(|s| s.offset > 0) {
            for i in grid.shifted_range(&[side.offset]) {
                let diff = (grid.at(i + side.offset) - grid.at(i)).abs();
                let d = cache
                    .entry(diff)
                    .or_insert_with_key(|diff| self.delta_pair(&zero, diff));
                if *d > best {
                    best = d.clone();
                }
            }
        }
        best
    }

    /// Searches the window for parallelograms `P` with `per(P) ≤ L` and
    /// `shape(P) > s₀` whose image under `φ` is not a parallelogram.
    pub fn verify_plemma(
        &self,
        map: &impl DeltaMap,
        l: &BigInt,
        window: &Window,
        opts: &PlemmaOptions,
    ) -> Result<PlemmaReport> {
        self.check_class(l, "L")?;
        let grid = GridImage::build(map, self.p, l, window)?;
        let bound = opts
            .perimeter_bound
            .clone()
            .unwrap_or_else(|| Rational::from_int(l.clone()));
        let sides = self.sides(l, window, &bound)?;
        let image_class = match map.image_class() {
            Some(k) => k.clone(),
            None => grid.image_class(self.p),
        };
        let adaptation = match map.adaptation_bound() {
            Some(d) => d.clone(),
            None => self.adaptation(&grid, &sides),
        };
        let mut report = PlemmaReport {
            perimeter_bound: bound.clone(),
            image_class: image_class.to_string(),
            adaptation_bound: adaptation.clone(),
            threshold: None,
            effective_s0: None,
            checked: 0,
            violations: Vec::new(),
        };
        let pairs: Vec<(&Side, &Side)> = sides
            .iter()
            .flat_map(|u| sides.iter().map(move |v| (u, v)))
            .filter(|(u, v)| &u.delta + &v.delta <= bound)
            .collect();
        if pairs.is_empty() {
            return Ok(report);
        }
        let threshold = self.s_threshold(map.bilipschitz(), &image_class, &adaptation)?;
        let s0 = threshold.s0 + opts.s0_increment;
        report.threshold = Some(threshold);
        report.effective_s0 = Some(s0);

        for (u, v) in pairs.into_iter().filter(|(u, v)| u.val.abs_diff(v.val) > s0) {
            for i in grid.shifted_range(&[u.offset, v.offset, u.offset + v.offset]) {
                report.checked += 1;
                let fa = grid.at(i);
                let fb = grid.at(i + u.offset);
                let fc = grid.at(i + v.offset);
                let fd = grid.at(i + u.offset + v.offset);
                if !is_parallelogram(fa, fb, fc, fd) {
                    report
                        .violations
                        .push(Parallelogram::spanned(&grid.point(i), &u.value, &v.value));
                }
            }
        }
        report.violations.sort();
        Ok(report)
    }
}

/// Outcome of the affinity extraction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Extraction {
    /// `φ` is multiplication by `alpha` on the grid.
    Multiplier {
        alpha: Rational,
        s0: u64,
        generator: Rational,
    },
    /// `φ(x + z) − φ(x) ≠ φ(z)`.
    Failure {
        x: DeltaPoint,
        z: DeltaPoint,
        lhs: DeltaPoint,
        rhs: DeltaPoint,
    },
    /// All differences check out yet `φ(x) ≠ αx`.
    NotLinear {
        x: DeltaPoint,
        fx: DeltaPoint,
        expected: DeltaPoint,
    },
}

impl DiagonalLattice {
    /// Recovers the constant `C_q` with `φ = C_q·x` on `(1/q)·Z[1/p]`
    /// through distinguished pairs.
    ///
    /// The generating set is `{1/q, 1/(pq)}`, so its `H`-orbit contains
    /// every `p^{-n}/q`. For the distinguished pair `(0, 1/q)` the
    /// admissible translations are the orbit elements `y` with
    /// `|ν(y)| ≥ s₀`; the smallest such `y = p^{-n}/q` with
    /// `n ≤ generator_limit` drives the chain. Every grid point `x` must
    /// then satisfy `φ(x + y) − φ(x) = φ(y)` and `φ(x + s) − φ(x) = φ(s)`
    /// for `s` in the generating set and the grid step.
    pub fn extract_affine(
        &self,
        map: &impl DeltaMap,
        q: &BigInt,
        window: &Window,
        generator_limit: u32,
    ) -> Result<Extraction> {
        self.check_class(q, "q")?;
        let p = self.p;
        let grid = GridImage::build(map, p, q, window)?;
        let qr = Rational::from_int(q.clone());
        let unit = qr.recip()?;
        let gens = [unit.clone(), &unit / &p.pow(1)];
        let zero = Rational::zero();
        let two_delta = gens
            .iter()
            .map(|s| Rational::from_int(2) * self.delta_pair(&zero, s))
            .fold(Rational::zero(), Rational::max);
        let bound = qr.clone().max(two_delta);
        let sides = self.sides(q, window, &bound)?;
        let image_class = match map.image_class() {
            Some(k) => k.clone(),
            None => grid.image_class(p),
        };
        let adaptation = match map.adaptation_bound() {
            Some(d) => d.clone(),
            None => self.adaptation(&grid, &sides),
        };
        let s0 = self
            .s_threshold(map.bilipschitz(), &image_class, &adaptation)?
            .s0;
        let depth = s0.max(1);
        if depth > u64::from(generator_limit) {
            return Err(Error::WindowTooSmall {
                s0,
                limit: generator_limit,
            });
        }
        let generator = &unit / &p.pow(depth as i64);

        let eval = |x: &Rational| map.image(x).ok_or_else(|| Error::MissingPoint(x.clone()));
        let step = grid.point(1);
        let mut translations = vec![generator.clone()];
        translations.extend(gens.iter().cloned());
        translations.push(step);
        for z in &translations {
            let fz = eval(z)?;
            for i in -grid.half..=grid.half {
                let x = grid.point(i);
                let lhs = eval(&(&x + z))? - grid.at(i);
                if lhs != fz {
                    return Ok(Extraction::Failure {
                        x,
                        z: z.clone(),
                        lhs,
                        rhs: fz,
                    });
                }
            }
        }
        let alpha = eval(&unit)? * &qr;
        for i in -grid.half..=grid.half {
            let x = grid.point(i);
            let expected = &alpha * &x;
            if grid.at(i) != &expected {
                return Ok(Extraction::NotLinear {
                    fx: grid.at(i).clone(),
                    x,
                    expected,
                });
            }
        }
        Ok(Extraction::Multiplier {
            alpha,
            s0,
            generator,
        })
    }
}

/// Checks `d_X/K − C ≤ d_Y(f x₁, f x₂) ≤ K·d_X + C` on every sampled pair.
pub fn qie_check<X, Y>(
    pairs: &[(X, X)],
    f: impl Fn(&X) -> Y,
    dist_x: impl Fn(&X, &X) -> Rational,
    dist_y: impl Fn(&Y, &Y) -> Rational,
    k: &Rational,
    c: &Rational,
) -> bool {
    assert!(*k >= Rational::one() && !c.is_negative());
    pairs.iter().all(|(x1, x2)| {
        let dx = dist_x(x1, x2);
        let dy = dist_y(&f(x1), &f(x2));
        &dx / k - c <= dy && dy <= k * &dx + c
    })
}

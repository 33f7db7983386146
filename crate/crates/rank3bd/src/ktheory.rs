//! Ordered K-theory of the twisted algebras as inductive limits.
//!
//! At level `n` both groups are `⊕_{v ∈ E⁰_n} Z²`. A K₀ pair `(p, q)` at `v`
//! stands for `p/w(v) + qθ`; along an edge with ratio `l = w(s)/w(r)` the
//! connecting maps act blockwise by
//!
//! ```text
//! A = [[l, 0], [0, 1]]      B = [[1, 1 - l], [0, l]]      T = [[0, 1], [1, 1]]
//! ```
//!
//! and `T` carries K₁ to K₀ intertwining `B` with `A`.

use std::borrow::Cow;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;

use crate::arith::{theta_sign, ThetaReal, ThetaSpec};
use crate::bratteli::{Cofinality, StationaryKind, VertexId, WeightedBratteli};
use crate::error::{Error, Result};
use crate::kgraph::{RankThreeGraph, RankThreeMorphism};

pub type Pair = (BigInt, BigInt);

fn pair(a: i64, b: i64) -> Pair {
    (BigInt::from(a), BigInt::from(b))
}

fn zero_pair() -> Pair {
    (BigInt::zero(), BigInt::zero())
}

/// `Σ_v (p_v/w(v) + q_v θ) δ_v` at a fixed level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KZeroClass {
    pub level: usize,
    pub coords: Vec<Pair>,
}

/// `Σ_v (a_v, b_v) δ_v` at a fixed level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KOneClass {
    pub level: usize,
    pub coords: Vec<Pair>,
}

macro_rules! class_common {
    ($t:ident, $tag:literal) => {
        impl $t {
            pub fn zero(e: &WeightedBratteli, level: usize) -> Self {
                $t { level, coords: vec![zero_pair(); e.level(level).len()] }
            }

            /// `(a, b) δ_v`.
            pub fn single(e: &WeightedBratteli, v: VertexId, a: i64, b: i64) -> Self {
                let mut x = Self::zero(e, v.level);
                x.coords[v.index] = pair(a, b);
                x
            }

            pub fn is_zero(&self) -> bool {
                self.coords.iter().all(|(a, b)| a.is_zero() && b.is_zero())
            }

            pub fn sub(&self, o: &Self) -> Self {
                assert_eq!(self.level, o.level, "classes at different levels");
                let coords = self.coords.iter().zip(&o.coords).map(|(x, y)| (&x.0 - &y.0, &x.1 - &y.1)).collect();
                $t { level: self.level, coords }
            }

            pub fn add(&self, o: &Self) -> Self {
                assert_eq!(self.level, o.level, "classes at different levels");
                let coords = self.coords.iter().zip(&o.coords).map(|(x, y)| (&x.0 + &y.0, &x.1 + &y.1)).collect();
                $t { level: self.level, coords }
            }

            /// Parses `tag@n: name=(a,b); name=(a,b)`; unnamed vertices are zero.
            pub fn parse(e: &WeightedBratteli, text: &str) -> Result<Self> {
                let bad = || Error::Parse(format!("malformed class {text:?}"));
                let rest = text.trim().strip_prefix(concat!($tag, "@")).ok_or_else(bad)?;
                let (lvl, body) = rest.split_once(':').ok_or_else(bad)?;
                let level: usize = lvl.trim().parse().map_err(|_| bad())?;
                if level == 0 || level > e.num_levels() {
                    return Err(Error::Parse(format!("level {level} is not in the diagram")));
                }
                let mut x = Self::zero(e, level);
                for item in body.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    let (name, val) = item.split_once('=').ok_or_else(bad)?;
                    let v = e
                        .level_ids(level)
                        .find(|&v| e.name(v) == name.trim())
                        .ok_or_else(|| Error::Parse(format!("no vertex {} at level {level}", name.trim())))?;
                    let inner = val.trim().strip_prefix('(').and_then(|s| s.strip_suffix(')')).ok_or_else(bad)?;
                    let (a, b) = inner.split_once(',').ok_or_else(bad)?;
                    let a: BigInt = a.trim().parse().map_err(|_| bad())?;
                    let b: BigInt = b.trim().parse().map_err(|_| bad())?;
                    x.coords[v.index] = (a, b);
                }
                Ok(x)
            }

            pub fn render(&self, e: &WeightedBratteli) -> String {
                let items: Vec<String> = e
                    .level_ids(self.level)
                    .map(|v| {
                        let (a, b) = &self.coords[v.index];
                        format!("{}=({a},{b})", e.name(v))
                    })
                    .collect();
                format!(concat!($tag, "@{}: {}"), self.level, items.join("; "))
            }
        }
    };
}

class_common!(KZeroClass, "k0");
class_common!(KOneClass, "k1");

impl KZeroClass {
    /// Value of the coordinate at `v` as `p/w(v) + qθ`.
    pub fn value_at(&self, e: &WeightedBratteli, index: usize) -> ThetaReal {
        let v = VertexId::new(self.level, index);
        let (p, q) = &self.coords[index];
        ThetaReal::new(BigRational::new(p.clone(), BigInt::from(e.weight(v))), BigRational::from(q.clone()))
    }

    /// Total value `Σ_v (p_v/w(v) + q_v θ)`.
    pub fn value(&self, e: &WeightedBratteli) -> ThetaReal {
        (0..self.coords.len()).fold(ThetaReal::zero(), |acc, i| acc + self.value_at(e, i))
    }
}

/// A view of `e` with at least `n` levels, extending stationary diagrams.
pub fn reach(e: &WeightedBratteli, n: usize) -> Result<Cow<'_, WeightedBratteli>> {
    if n <= e.num_levels() {
        Ok(Cow::Borrowed(e))
    } else if e.stationary().is_some() {
        Ok(Cow::Owned(e.extended(n)?))
    } else {
        Err(Error::Truncation(format!("level {n} is beyond the diagram prefix of {} levels", e.num_levels())))
    }
}

pub fn a_block(l: i64) -> [[i64; 2]; 2] {
    [[l, 0], [0, 1]]
}

pub fn b_block(l: i64) -> [[i64; 2]; 2] {
    [[1, 1 - l], [0, l]]
}

pub const T_BLOCK: [[i64; 2]; 2] = [[0, 1], [1, 1]];

fn apply(m: [[i64; 2]; 2], x: &Pair) -> Pair {
    (&x.0 * m[0][0] + &x.1 * m[0][1], &x.0 * m[1][0] + &x.1 * m[1][1])
}

fn push_once(e: &WeightedBratteli, level: usize, coords: &[Pair], block: fn(i64) -> [[i64; 2]; 2]) -> Vec<Pair> {
    let mut out = vec![zero_pair(); e.level(level + 1).len()];
    for v in e.level_ids(level) {
        for &f in e.children(v) {
            let u = e.edge(f).source;
            let img = apply(block(e.ratio(f) as i64), &coords[v.index]);
            let slot = &mut out[u.index];
            slot.0 += img.0;
            slot.1 += img.1;
        }
    }
    out
}

pub fn push_a(e: &WeightedBratteli, x: &KZeroClass, target: usize) -> Result<KZeroClass> {
    if target < x.level {
        return Err(Error::Precondition(format!("cannot push from level {} down to {target}", x.level)));
    }
    let e = reach(e, target)?;
    let mut coords = x.coords.clone();
    for n in x.level..target {
        coords = push_once(&e, n, &coords, a_block);
    }
    Ok(KZeroClass { level: target, coords })
}

pub fn push_b(e: &WeightedBratteli, x: &KOneClass, target: usize) -> Result<KOneClass> {
    if target < x.level {
        return Err(Error::Precondition(format!("cannot push from level {} down to {target}", x.level)));
    }
    let e = reach(e, target)?;
    let mut coords = x.coords.clone();
    for n in x.level..target {
        coords = push_once(&e, n, &coords, b_block);
    }
    Ok(KOneClass { level: target, coords })
}

/// `(a, b) ↦ (b, a + b)` per vertex.
pub fn theta_iso(x: &KOneClass) -> KZeroClass {
    KZeroClass { level: x.level, coords: x.coords.iter().map(|p| apply(T_BLOCK, p)).collect() }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equality {
    Equal(usize),
    DistinctSoFar(usize),
    DistinctForever,
}

impl fmt::Display for Equality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Equality::Equal(m) => write!(f, "Equal({m})"),
            Equality::DistinctSoFar(n) => write!(f, "DistinctSoFar({n})"),
            Equality::DistinctForever => write!(f, "DistinctForever"),
        }
    }
}

/// Whether `A_n` is injective for every `n ≥ level` in a branching region:
/// each vertex has a child and no child has two parents.
fn injective_from(e: &WeightedBratteli, level: usize) -> bool {
    (level..e.num_levels()).all(|n| {
        e.level_ids(n).all(|v| !e.children(v).is_empty()) && e.level_ids(n + 1).all(|u| e.parents(u).len() <= 1)
    })
}

/// Equality in the limit, by bounded search with a kernel certificate on
/// stationary diagrams.
pub fn k0_equal(e: &WeightedBratteli, x: &KZeroClass, y: &KZeroClass, max_level: usize) -> Result<Equality> {
    let start = x.level.max(y.level);
    let top = max_level.max(start);
    let (mut x, mut y) = (push_a(e, x, start)?, push_a(e, y, start)?);
    for m in start..=top {
        if x == y {
            return Ok(Equality::Equal(m));
        }
        if m < top {
            x = push_a(e, &x, m + 1)?;
            y = push_a(e, &y, m + 1)?;
        }
    }
    let Some(st) = e.stationary() else {
        return Ok(Equality::DistinctSoFar(top));
    };
    let base = top.max(st.start_level);
    let d = push_a(e, &x.sub(&y), base)?;
    if d.is_zero() {
        return Ok(Equality::DistinctSoFar(top));
    }
    match st.kind {
        StationaryKind::Branching => {
            let ext = reach(e, base + st.period + 1)?;
            if injective_from(&ext, base) {
                return Ok(Equality::DistinctForever);
            }
        }
        StationaryKind::Block => {
            // The period map P is a fixed endomorphism of Z^{2q} here, so its
            // kernel chain has stabilised by the 2q-th power.
            let dim = 2 * d.coords.len();
            if !push_a(e, &d, base + st.period * dim)?.is_zero() {
                return Ok(Equality::DistinctForever);
            }
        }
    }
    Ok(Equality::DistinctSoFar(top))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Positivity {
    PositiveWitnessed(usize),
    NotPositiveSoFar(usize),
    Zero,
}

impl fmt::Display for Positivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Positivity::PositiveWitnessed(m) => write!(f, "PositiveWitnessed({m})"),
            Positivity::NotPositiveSoFar(n) => write!(f, "NotPositiveSoFar({n})"),
            Positivity::Zero => write!(f, "Zero"),
        }
    }
}

fn coordinatewise_nonneg(e: &WeightedBratteli, x: &KZeroClass, spec: &ThetaSpec) -> bool {
    (0..x.coords.len()).all(|i| theta_sign(&x.value_at(e, i), spec) >= 0)
}

pub fn k0_positive(e: &WeightedBratteli, x: &KZeroClass, spec: &ThetaSpec, max_level: usize) -> Result<Positivity> {
    let top = max_level.max(x.level);
    let ext = reach(e, top)?;
    let mut cur = x.clone();
    for m in x.level..=top {
        if cur.is_zero() {
            return Ok(Positivity::Zero);
        }
        if coordinatewise_nonneg(&ext, &cur, spec) {
            return Ok(Positivity::PositiveWitnessed(m));
        }
        if m < top {
            cur = push_a(&ext, &cur, m + 1)?;
        }
    }
    Ok(Positivity::NotPositiveSoFar(top))
}

/// `h₀([s_(v,i)]) = (1, 0) δ_v`, the same for every `i`.
pub fn vertex_class(e: &WeightedBratteli, v: VertexId, i: u64) -> Result<KZeroClass> {
    if v.level == 0 || v.level > e.num_levels() || v.index >= e.level(v.level).len() {
        return Err(Error::Invalid("no such vertex".into()));
    }
    if i >= e.weight(v) {
        return Err(Error::Invalid(format!("index {i} exceeds the weight of {}", e.name(v))));
    }
    Ok(KZeroClass::single(e, v, 1, 0))
}

/// The class of the unit of the level-`n` corner: `Σ_v (w(v), 0) δ_v`.
pub fn unit_class(e: &WeightedBratteli, level: usize) -> KZeroClass {
    let coords = e.level_ids(level).map(|v| pair(e.weight(v) as i64, 0)).collect();
    KZeroClass { level, coords }
}

#[derive(Clone, Debug)]
pub struct KOneGenerators {
    /// The unique morphism of degree `(w(v), 0)` at `(v, 0)`.
    pub mu: RankThreeMorphism,
    /// The unique morphism of degree `(w(v) − 1, 1)` at `(v, 0)`.
    pub nu: RankThreeMorphism,
    pub loop_blue: KOneClass,
    pub mixed: KOneClass,
}

pub fn k1_generators(g: &RankThreeGraph, v: VertexId, i: u64) -> Result<KOneGenerators> {
    let e = g.diagram();
    let w = e.weight(v);
    if i >= w {
        return Err(Error::Invalid(format!("index {i} exceeds the weight of {}", e.name(v))));
    }
    let unique = |p: u64, q: u64| -> Result<RankThreeMorphism> {
        let found = g.enumerate(v, i, p, q, 0);
        match found.as_slice() {
            [m] => Ok(m.clone()),
            _ => Err(Error::Invalid(format!("{} morphisms of degree ({p},{q}) at ({},{i})", found.len(), e.name(v)))),
        }
    };
    Ok(KOneGenerators {
        mu: unique(w, 0)?,
        nu: unique(w - 1, 1)?,
        loop_blue: KOneClass::single(e, v, 1, 0),
        mixed: KOneClass::single(e, v, 0, 1),
    })
}

pub type Matrix = Vec<Vec<i64>>;

fn level_matrix(e: &WeightedBratteli, n: usize, block: impl Fn(i64) -> [[i64; 2]; 2]) -> Matrix {
    let (rows, cols) = (2 * e.level(n + 1).len(), 2 * e.level(n).len());
    let mut m = vec![vec![0; cols]; rows];
    for v in e.level_ids(n) {
        for &f in e.children(v) {
            let u = e.edge(f).source;
            let b = block(e.ratio(f) as i64);
            for (r, row) in b.iter().enumerate() {
                for (c, x) in row.iter().enumerate() {
                    m[2 * u.index + r][2 * v.index + c] += x;
                }
            }
        }
    }
    m
}

/// `A_n` from level `n` to `n + 1`; rows index targets.
pub fn a_matrix(e: &WeightedBratteli, n: usize) -> Matrix {
    level_matrix(e, n, a_block)
}

pub fn b_matrix(e: &WeightedBratteli, n: usize) -> Matrix {
    level_matrix(e, n, b_block)
}

pub fn t_matrix(e: &WeightedBratteli, n: usize) -> Matrix {
    let q = e.level(n).len();
    let mut m = vec![vec![0; 2 * q]; 2 * q];
    for i in 0..q {
        for r in 0..2 {
            for c in 0..2 {
                m[2 * i + r][2 * i + c] = T_BLOCK[r][c];
            }
        }
    }
    m
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    a.iter()
        .map(|row| (0..b.first().map_or(0, Vec::len)).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect())
        .collect()
}

/// `T·B = A·T` for one edge ratio.
pub fn intertwines(l: i64) -> bool {
    let lhs = mat_mul(&T_BLOCK.map(|r| r.to_vec()).to_vec(), &b_block(l).map(|r| r.to_vec()).to_vec());
    let rhs = mat_mul(&a_block(l).map(|r| r.to_vec()).to_vec(), &T_BLOCK.map(|r| r.to_vec()).to_vec());
    lhs == rhs
}

/// Checks `T_{n+1} B_n = A_n T_n` for every level of the prefix, and the
/// block identity for every edge.
pub fn check_intertwiner(e: &WeightedBratteli) -> bool {
    (0..e.edges().len()).all(|f| intertwines(e.ratio(f) as i64))
        && (1..e.num_levels())
            .all(|n| mat_mul(&t_matrix(e, n + 1), &b_matrix(e, n)) == mat_mul(&a_matrix(e, n), &t_matrix(e, n)))
}

/// The nonnegative matrices `A'_n` for `n = 1..levels-1`, each with rows
/// indexed by level `n + 1` and columns by level `n`.
pub fn emit_nonneg_matrices(e: &WeightedBratteli, levels: usize) -> Result<Vec<Matrix>> {
    let e = reach(e, levels)?;
    Ok((1..levels).map(|n| a_matrix(&e, n)).collect())
}

pub fn matrix_csv(m: &Matrix) -> String {
    m.iter().map(|r| r.iter().map(i64::to_string).collect::<Vec<_>>().join(",") + "\n").collect()
}

/// Flattens a class as `(p_v, q_v)` in vertex order.
pub fn class_vector(x: &KZeroClass) -> Vec<BigInt> {
    x.coords.iter().flat_map(|(p, q)| [p.clone(), q.clone()]).collect()
}

pub fn mat_vec(m: &Matrix, x: &[BigInt]) -> Vec<BigInt> {
    m.iter().map(|r| r.iter().zip(x).map(|(a, b)| b * *a).sum()).collect()
}

/// `c` with `a_i ≤ c ≤ b_j`, taking the coordinatewise maximum of the `a`s
/// at a level where every `b_j − a_i` is already nonnegative.
pub fn riesz_interpolate(
    e: &WeightedBratteli,
    lower: &[KZeroClass],
    upper: &[KZeroClass],
    spec: &ThetaSpec,
    max_level: usize,
) -> Result<KZeroClass> {
    let start = lower.iter().chain(upper).map(|x| x.level).max().unwrap_or(1);
    let top = max_level.max(start);
    let ext = reach(e, top)?;
    if lower.is_empty() {
        return Ok(KZeroClass::zero(&ext, start));
    }
    for m in start..=top {
        let a: Vec<KZeroClass> = lower.iter().map(|x| push_a(&ext, x, m)).collect::<Result<_>>()?;
        let b: Vec<KZeroClass> = upper.iter().map(|x| push_a(&ext, x, m)).collect::<Result<_>>()?;
        let ok = b.iter().all(|bj| a.iter().all(|ai| coordinatewise_nonneg(&ext, &bj.sub(ai), spec)));
        if !ok {
            continue;
        }
        let mut c = a[0].clone();
        for ai in &a[1..] {
            for i in 0..c.coords.len() {
                let diff = ai.sub(&c);
                if theta_sign(&diff.value_at(&ext, i), spec) > 0 {
                    c.coords[i] = ai.coords[i].clone();
                }
            }
        }
        return Ok(c);
    }
    Err(Error::Precondition(format!("no level up to {top} witnesses a_i ≤ b_j for all pairs")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Simplicity {
    Simple,
    NotSimple,
    Unknown,
}

impl fmt::Display for Simplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Simplicity::Simple => "Simple",
            Simplicity::NotSimple => "NotSimple",
            Simplicity::Unknown => "Unknown",
        };
        f.write_str(s)
    }
}

pub fn simplicity(e: &WeightedBratteli, depth: usize) -> Result<Simplicity> {
    Ok(match e.cofinality(depth)? {
        Cofinality::CofinalWitnessed(_) => Simplicity::Simple,
        Cofinality::NotCofinalWitnessed(_) => Simplicity::NotSimple,
        Cofinality::Unknown => Simplicity::Unknown,
    })
}

/// `(1/w)Z+θZ`, or `Z+θZ` when `w = 1`.
pub fn vertex_group_text(w: u64) -> String {
    if w == 1 {
        "Z+θZ".into()
    } else {
        format!("(1/{w})Z+θZ")
    }
}

/// The level-`n` K₀ group as a direct sum over the vertices.
pub fn level_group_text(e: &WeightedBratteli, n: usize) -> String {
    e.level_ids(n).map(|v| vertex_group_text(e.weight(v))).collect::<Vec<_>>().join(" ⊕ ")
}

/// Whether `a + bθ` lies in `(1/w(v))Z + θZ`.
pub fn contains_value(e: &WeightedBratteli, v: VertexId, value: &ThetaReal) -> bool {
    let w = BigRational::from(BigInt::from(e.weight(v)));
    value.b.is_integer() && (&value.a * w).is_integer()
}

fn radical(mut n: u64) -> u64 {
    let mut r = 1;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            r *= p;
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        r *= n;
    }
    r
}

/// A closed form for the limit group where one is known.
pub fn limit_summary(e: &WeightedBratteli) -> Result<String> {
    let generic = "limit: no closed form recorded".to_string();
    let Some(st) = e.stationary() else {
        return Ok(generic);
    };
    let (s, p) = (st.start_level, st.period);
    let ext = reach(e, s + p + 1)?;
    match st.kind {
        StationaryKind::Branching => {
            let branches = (s..s + p).all(|n| ext.level_ids(n).all(|v| ext.children(v).len() >= 2));
            Ok(if branches { "limit ≅ (Z+θZ)^∞ with coordinatewise cone".into() } else { generic })
        }
        StationaryKind::Block => {
            let q = ext.level(s).len();
            if q == 1 {
                let scale = ext.weight(VertexId::new(s + p, 0)) / ext.weight(VertexId::new(s, 0));
                return Ok(match radical(scale) {
                    1 => "limit ≅ Z+θZ".into(),
                    r => format!("limit ≅ Z[1/{r}]+θZ"),
                });
            }
            let complete = p == 1
                && ext.level_ids(s).all(|v| {
                    let ch = ext.children(v);
                    ch.len() == q && ch.iter().all(|&f| ext.ratio(f) == 1)
                });
            Ok(if complete { format!("limit ≅ Z[1/{q}]+Z[θ/{q}]") } else { generic })
        }
    }
}

/// Weights at a level, comma-separated.
pub fn weights_text(e: &WeightedBratteli, n: usize) -> String {
    e.level_ids(n).map(|v| e.weight(v).to_string()).collect::<Vec<_>>().join(",")
}

/// The common denominator of the level group: the lcm of its weights.
pub fn level_denominator(e: &WeightedBratteli, n: usize) -> u64 {
    e.level_ids(n).map(|v| e.weight(v)).fold(1, |a, b| a.lcm(&b))
}

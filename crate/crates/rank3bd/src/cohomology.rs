//! Categorical cochains on truncated k-graphs.
//!
//! Cochains are normalised: an `r`-cochain (`r ≥ 1`) vanishes on any tuple
//! containing an identity. Only interior tuples, whose total degree stays
//! inside the truncation bound, carry values, and every identity is checked
//! on interior tuples only.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{CirclePoint, ThetaSpec};
use crate::error::{Error, Result};
use crate::kgraph::{dv, DegreeVector, MorphId, RankThreeMorphism, Tower, TruncatedKGraph};

/// A coefficient group with decidable equality.
pub trait Group: Clone + fmt::Debug {
    type Elem: Clone + PartialEq + fmt::Debug;
    fn zero(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn render(&self, a: &Self::Elem) -> String;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    fn is_zero(&self, a: &Self::Elem) -> bool {
        *a == self.zero()
    }
}

/// `Z/mZ` with representatives in `0..m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZMod(pub u64);

impl Group for ZMod {
    type Elem = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        ((*a as u128 + *b as u128) % self.0 as u128) as u64
    }
    fn neg(&self, a: &u64) -> u64 {
        (self.0 - a % self.0) % self.0
    }
    fn render(&self, a: &u64) -> String {
        a.to_string()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Integers;

impl Group for Integers {
    type Elem = BigInt;
    fn zero(&self) -> BigInt {
        BigInt::zero()
    }
    fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        a + b
    }
    fn neg(&self, a: &BigInt) -> BigInt {
        -a
    }
    fn render(&self, a: &BigInt) -> String {
        a.to_string()
    }
}

/// The circle in exponent form `a + bθ (mod 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CircleTheta;

impl Group for CircleTheta {
    type Elem = CirclePoint;
    fn zero(&self) -> CirclePoint {
        CirclePoint::zero()
    }
    fn add(&self, a: &CirclePoint, b: &CirclePoint) -> CirclePoint {
        a.clone() + b.clone()
    }
    fn neg(&self, a: &CirclePoint) -> CirclePoint {
        -a.clone()
    }
    fn render(&self, a: &CirclePoint) -> String {
        a.to_string()
    }
}

/// Composable `r`-tuples whose total degree is within the bound, in
/// lexicographic order of ids. For `r = 0` these are the vertices.
pub fn composable_tuples(g: &TruncatedKGraph, r: usize) -> Vec<Vec<MorphId>> {
    if r == 0 {
        return (0..g.num_vertices()).map(|v| vec![v]).collect();
    }
    let mut out: Vec<(Vec<MorphId>, DegreeVector)> =
        (0..g.num_morphisms()).map(|m| (vec![m], g.degree(m).clone())).collect();
    for _ in 1..r {
        out = out
            .into_iter()
            .flat_map(|(t, d)| {
                let last = *t.last().unwrap();
                g.with_range(g.source(last))
                    .iter()
                    .filter_map(|&m| {
                        let d2 = d.add(g.degree(m));
                        d2.le(g.bound()).then(|| ([t.clone(), vec![m]].concat(), d2))
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        out.sort();
    }
    out.into_iter().map(|(t, _)| t).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cochain<G: Group> {
    group: G,
    arity: usize,
    values: BTreeMap<Vec<MorphId>, G::Elem>,
}

impl<G: Group> Cochain<G> {
    pub fn zero(group: G, arity: usize) -> Self {
        Cochain { group, arity, values: BTreeMap::new() }
    }

    /// Evaluates `f` on every interior tuple, forcing the normalisation.
    pub fn from_fn(g: &TruncatedKGraph, group: G, arity: usize, mut f: impl FnMut(&[MorphId]) -> G::Elem) -> Self {
        let mut c = Cochain::zero(group, arity);
        for t in composable_tuples(g, arity) {
            if arity > 0 && t.iter().any(|&m| g.is_identity(m)) {
                continue;
            }
            let v = f(&t);
            c.set(t, v);
        }
        c
    }

    pub fn group(&self) -> &G {
        &self.group
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn get(&self, t: &[MorphId]) -> G::Elem {
        self.values.get(t).cloned().unwrap_or_else(|| self.group.zero())
    }

    pub fn set(&mut self, t: Vec<MorphId>, v: G::Elem) {
        if self.group.is_zero(&v) {
            self.values.remove(&t);
        } else {
            self.values.insert(t, v);
        }
    }

    /// Tuples with a nonzero value.
    pub fn support(&self) -> impl Iterator<Item = (&Vec<MorphId>, &G::Elem)> {
        self.values.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut c = self.clone();
        for (t, v) in &o.values {
            let s = self.group.add(&c.get(t), v);
            c.set(t.clone(), s);
        }
        c
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut c = self.clone();
        for (t, v) in &o.values {
            let s = self.group.sub(&c.get(t), v);
            c.set(t.clone(), s);
        }
        c
    }

    /// One line per interior tuple: comma-separated ids, a tab, the value.
    pub fn dump(&self, g: &TruncatedKGraph) -> String {
        let mut s = String::new();
        for t in composable_tuples(g, self.arity) {
            let ids: Vec<String> = t.iter().map(usize::to_string).collect();
            s.push_str(&format!("{}\t{}\n", ids.join(","), self.group.render(&self.get(&t))));
        }
        s
    }
}

/// `δ^r f` on the interior `(r+1)`-tuples.
pub fn delta<G: Group>(g: &TruncatedKGraph, f: &Cochain<G>) -> Cochain<G> {
    let grp = f.group.clone();
    let r = f.arity;
    let gg = grp.clone();
    Cochain::from_fn(g, grp, r + 1, |t| {
        if r == 0 {
            return gg.sub(&f.get(&[g.source(t[0])]), &f.get(&[g.range(t[0])]));
        }
        let mut acc = f.get(&t[1..]);
        for i in 1..=r {
            let c = g.compose(t[i - 1], t[i]).expect("interior tuple");
            let mut inner = t[..i - 1].to_vec();
            inner.push(c);
            inner.extend_from_slice(&t[i + 1..]);
            let v = f.get(&inner);
            acc = if i % 2 == 0 { gg.add(&acc, &v) } else { gg.sub(&acc, &v) };
        }
        let last = f.get(&t[..r]);
        if (r + 1).is_multiple_of(2) {
            gg.add(&acc, &last)
        } else {
            gg.sub(&acc, &last)
        }
    })
}

/// `Ok(())` if the cocycle identity holds on every interior triple,
/// otherwise the first violating triple.
pub fn is_cocycle<G: Group>(g: &TruncatedKGraph, c: &Cochain<G>) -> std::result::Result<(), [MorphId; 3]> {
    let grp = &c.group;
    for t in composable_tuples(g, 3) {
        let (l, m, n) = (t[0], t[1], t[2]);
        let lm = g.compose(l, m).expect("interior");
        let mn = g.compose(m, n).expect("interior");
        let lhs = grp.add(&c.get(&[l, m]), &c.get(&[lm, n]));
        let rhs = grp.add(&c.get(&[m, n]), &c.get(&[l, mn]));
        if lhs != rhs {
            return Err([l, m, n]);
        }
    }
    Ok(())
}

/// Uniform samples from the `Z/m`-module of normalised 2-cocycles.
#[derive(Clone, Debug)]
pub struct CocycleSample {
    /// Size of the generating set found by elimination; equals the nullity
    /// when `m` is prime.
    pub generators: usize,
    pub cocycles: Vec<Cochain<ZMod>>,
}

pub fn sample_cocycles(g: &TruncatedKGraph, m: u64, count: usize, seed: u64) -> Result<CocycleSample> {
    if m < 2 {
        return Err(Error::Invalid(format!("modulus {m} must be at least 2")));
    }
    let pairs: Vec<Vec<MorphId>> =
        composable_tuples(g, 2).into_iter().filter(|t| !g.is_identity(t[0]) && !g.is_identity(t[1])).collect();
    let col: HashMap<&[MorphId], usize> = pairs.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
    let mut rows = Vec::new();
    for t in composable_tuples(g, 3) {
        if t.iter().any(|&x| g.is_identity(x)) {
            continue;
        }
        let (l, mm, n) = (t[0], t[1], t[2]);
        let lm = g.compose(l, mm).unwrap();
        let mn = g.compose(mm, n).unwrap();
        let mut row: BTreeMap<usize, i64> = BTreeMap::new();
        for (p, s) in [([l, mm], 1), ([lm, n], 1), ([mm, n], -1), ([l, mn], -1)] {
            *row.entry(col[&p[..]]).or_default() += s;
        }
        rows.push(row.into_iter().filter(|&(_, v)| v != 0).collect::<Vec<_>>());
    }
    let gens = kernel_generators(&rows, pairs.len(), m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grp = ZMod(m);
    let cocycles = (0..count)
        .map(|_| {
            let mut x = vec![0u64; pairs.len()];
            for gvec in &gens {
                let a = rng.gen_range(0..m);
                for (xi, gi) in x.iter_mut().zip(gvec) {
                    *xi = ((*xi as u128 + a as u128 * *gi as u128) % m as u128) as u64;
                }
            }
            let mut c = Cochain::zero(grp, 2);
            for (p, v) in pairs.iter().zip(x) {
                c.set(p.clone(), v);
            }
            c
        })
        .collect();
    Ok(CocycleSample { generators: gens.len(), cocycles })
}

fn prime_powers(mut m: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if m > 1 {
        out.push((m, 1));
    }
    out
}

fn mul_mod(a: u64, b: u64, q: u64) -> u64 {
    (a as u128 * b as u128 % q as u128) as u64
}

fn inv_mod(a: u64, q: u64) -> u64 {
    let g = Integer::extended_gcd(&(a as i128), &(q as i128));
    debug_assert!(g.gcd == 1);
    g.x.rem_euclid(q as i128) as u64
}

fn valuation(mut a: u64, p: u64) -> u32 {
    let mut v = 0;
    while a.is_multiple_of(p) {
        a /= p;
        v += 1;
    }
    v
}

/// Generators of `{x ∈ (Z/m)^n : Σ_j a_ij x_j = 0 for every row i}`.
pub fn kernel_generators(rows: &[Vec<(usize, i64)>], ncols: usize, m: u64) -> Vec<Vec<u64>> {
    let parts: Vec<(u64, Vec<Vec<u64>>)> = prime_powers(m)
        .into_iter()
        .map(|(p, e)| {
            let q = p.pow(e);
            (q, kernel_prime_power(rows, ncols, p, e))
        })
        .collect();
    let count = parts.iter().map(|(_, g)| g.len()).max().unwrap_or(0);
    // CRT: combine the t-th generator of every component.
    let crt: Vec<(u64, u64)> = parts
        .iter()
        .map(|(q, _)| {
            let rest = m / q;
            (*q, mul_mod(rest, inv_mod(rest % q, *q), m))
        })
        .collect();
    (0..count)
        .map(|t| {
            let mut v = vec![0u64; ncols];
            for ((_, gens), &(_, idem)) in parts.iter().zip(&crt) {
                if let Some(gv) = gens.get(t) {
                    for (x, y) in v.iter_mut().zip(gv) {
                        *x = ((*x as u128 + mul_mod(*y, idem, m) as u128) % m as u128) as u64;
                    }
                }
            }
            v
        })
        .collect()
}

type SparseRow = Vec<(usize, u64)>;

/// `row_i ← row_i − t·row_p` over `Z/q`, keeping the column index current.
fn axpy(rows: &mut [SparseRow], cols: &mut [BTreeSet<usize>], i: usize, p: usize, t: u64, q: u64) {
    let mut acc: BTreeMap<usize, u64> = rows[i].iter().copied().collect();
    for &(c, a) in &rows[p] {
        let e = acc.entry(c).or_insert(0);
        *e = (*e + q - mul_mod(t, a, q)) % q;
    }
    for &(c, _) in &rows[i] {
        cols[c].remove(&i);
    }
    rows[i] = acc.into_iter().filter(|&(_, v)| v != 0).collect();
    for &(c, _) in &rows[i] {
        cols[c].insert(i);
    }
}

fn kernel_prime_power(input: &[Vec<(usize, i64)>], ncols: usize, p: u64, e: u32) -> Vec<Vec<u64>> {
    let q = p.pow(e);
    let mut rows: Vec<SparseRow> = input
        .iter()
        .map(|r| {
            let mut merged: BTreeMap<usize, u64> = BTreeMap::new();
            for &(c, a) in r {
                let e = merged.entry(c).or_insert(0);
                *e = (*e + a.rem_euclid(q as i64) as u64) % q;
            }
            merged.into_iter().filter(|&(_, a)| a != 0).collect()
        })
        .collect();
    let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncols];
    for (i, r) in rows.iter().enumerate() {
        for &(c, _) in r {
            cols[c].insert(i);
        }
    }

    // Unit pivots, Gauss–Jordan style: each pivot column is cleared from
    // every other row, so a pivot row expresses its variable through
    // non-pivot columns only.
    let mut used = vec![false; rows.len()];
    let mut unit_pivot: Vec<Option<usize>> = vec![None; ncols];
    let mut queued = vec![true; rows.len()];
    let mut queue: Vec<usize> = (0..rows.len()).rev().collect();
    while let Some(r) = queue.pop() {
        queued[r] = false;
        if used[r] {
            continue;
        }
        let Some(&(c, a)) = rows[r].iter().filter(|&&(_, a)| a % p != 0).min_by_key(|&&(c, _)| (cols[c].len(), c))
        else {
            continue;
        };
        let inv = inv_mod(a, q);
        rows[r] = rows[r].iter().map(|&(cc, x)| (cc, mul_mod(x, inv, q))).collect();
        let others: Vec<usize> = cols[c].iter().copied().filter(|&i| i != r).collect();
        for i in others {
            let t = rows[i].iter().find(|&&(cc, _)| cc == c).unwrap().1;
            axpy(&mut rows, &mut cols, i, r, t, q);
            if !used[i] && !queued[i] {
                queued[i] = true;
                queue.push(i);
            }
        }
        used[r] = true;
        unit_pivot[c] = Some(r);
    }

    // Residual system: every entry is divisible by p. Smith-style full
    // pivoting on minimal valuation, column operations tracked in `v`.
    let res_cols: Vec<usize> = (0..ncols).filter(|&c| unit_pivot[c].is_none()).collect();
    let pos: HashMap<usize, usize> = res_cols.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let k = res_cols.len();
    let mut v: Vec<Vec<u64>> = (0..k).map(|i| (0..k).map(|j| u64::from(i == j)).collect()).collect();
    let mut alive: Vec<usize> = (0..rows.len()).filter(|&i| !used[i] && !rows[i].is_empty()).collect();
    let mut smith_pivot: HashMap<usize, u32> = HashMap::new();
    loop {
        alive.retain(|&i| !rows[i].is_empty());
        let best = alive
            .iter()
            .flat_map(|&i| rows[i].iter().map(move |&(c, a)| (i, c, a)))
            .min_by_key(|&(i, c, a)| (valuation(a, p), i, c));
        let Some((r, c, a)) = best else { break };
        let val = valuation(a, p);
        let pv = p.pow(val);
        let unit_inv = inv_mod(a / pv, q);
        let others: Vec<usize> = cols[c].iter().copied().filter(|&i| i != r && !used[i]).collect();
        for i in others {
            let t = rows[i].iter().find(|&&(cc, _)| cc == c).unwrap().1;
            axpy(&mut rows, &mut cols, i, r, mul_mod(t / pv, unit_inv, q), q);
        }
        let kc = pos[&c];
        for &(j, aj) in &rows[r] {
            if j == c {
                continue;
            }
            let t = mul_mod(aj / pv, unit_inv, q);
            let kj = pos[&j];
            for row in v.iter_mut() {
                row[kj] = (row[kj] + q - mul_mod(t, row[kc], q)) % q;
            }
        }
        for &(j, _) in &rows[r] {
            cols[j].remove(&r);
        }
        rows[r].clear();
        used[r] = true;
        smith_pivot.insert(kc, val);
    }

    let mut gens = Vec::new();
    for kc in 0..k {
        let scale = match smith_pivot.get(&kc) {
            None => 1,
            Some(&0) => continue,
            Some(&val) => p.pow(e - val),
        };
        let mut x = vec![0u64; ncols];
        for (kr, &c) in res_cols.iter().enumerate() {
            x[c] = mul_mod(v[kr][kc], scale, q);
        }
        for c in 0..ncols {
            if let Some(r) = unit_pivot[c] {
                let mut s = 0u64;
                for &(j, a) in &rows[r] {
                    if j != c {
                        s = (s + mul_mod(a, x[j], q)) % q;
                    }
                }
                x[c] = (q - s) % q;
            }
        }
        if x.iter().any(|&y| y != 0) {
            gens.push(x);
        }
    }
    gens
}

/// The green path `ξ_v` from `(v_n, i)` down to level 1.
fn xi_form(t: &Tower, v: usize) -> RankThreeMorphism {
    let (vid, i) = t.table.vertex_keys[v];
    let bottom = crate::bratteli::VertexId::new(1, 0);
    let path = t.lambda.upward_paths(bottom, vid.level - 1).swap_remove(0);
    let w1 = t.lambda.diagram().weight(bottom);
    RankThreeMorphism { range: bottom, range_index: i % w1, p: 0, q: 0, path, source_index: i }
}

/// `ξ_v` as a tabulated morphism.
pub fn xi(t: &Tower, v: usize) -> Result<MorphId> {
    t.table
        .id_of(&xi_form(t, v))
        .ok_or_else(|| Error::Truncation(format!("ξ for {} exceeds the bound", t.graph().vertex_name(v))))
}

/// `π(λ)`: the `Λ₁` factor of `ξ_{r(λ)} λ`.
pub fn projection_pi(t: &Tower, l: MorphId) -> Result<MorphId> {
    let form = t.table.forms.get(l).ok_or_else(|| Error::Invalid(format!("morphism {l} is not in the tower")))?;
    let range = t.table.vertex_of(form.range, form.range_index).unwrap();
    let lifted = t.lambda.compose(&xi_form(t, range), form)?;
    let (mu, _) = t.lambda.factorize(&lifted, [form.p, form.q, 0])?;
    let d = dv(&[mu.p as u32, mu.q as u32]);
    Ok(t.levels[0].with_range_degree(mu.range_index as usize, &d)[0])
}

fn all_pi(t: &Tower) -> Result<Vec<MorphId>> {
    (0..t.graph().num_morphisms()).map(|l| projection_pi(t, l)).collect()
}

/// `π_* c₁`, defined on the whole tower.
pub fn pullback<G: Group>(t: &Tower, c1: &Cochain<G>) -> Result<Cochain<G>> {
    if let Err(w) = is_cocycle(&t.levels[0], c1) {
        return Err(Error::Precondition(format!("not a cocycle on Λ₁: fails at {w:?}")));
    }
    let pi = all_pi(t)?;
    Ok(Cochain::from_fn(t.graph(), c1.group.clone(), 2, |x| c1.get(&[pi[x[0]], pi[x[1]]])))
}

/// `c|_{Λ_n}` through the embedding `ι_n`.
pub fn restrict_to_level<G: Group>(t: &Tower, c: &Cochain<G>, n: usize) -> Cochain<G> {
    Cochain::from_fn(&t.levels[n - 1], c.group.clone(), 2, |x| c.get(&[t.embed(n, x[0]), t.embed(n, x[1])]))
}

/// `(p_{1,n})_* c₁` on `Λ_n`.
pub fn along_projection<G: Group>(t: &Tower, c1: &Cochain<G>, n: usize) -> Cochain<G> {
    Cochain::from_fn(&t.levels[n - 1], c1.group.clone(), 2, |x| {
        c1.get(&[t.project_to_first(n, x[0]), t.project_to_first(n, x[1])])
    })
}

/// `b(λ) = c(ξ_{r(λ)}, λ) − c(π(λ), ξ_{s(λ)})`.
pub fn b_cochain<G: Group>(t: &Tower, c: &Cochain<G>) -> Result<Cochain<G>> {
    let g = t.graph();
    let grp = c.group.clone();
    let mut b = Cochain::zero(grp.clone(), 1);
    for l in 0..g.num_morphisms() {
        if g.is_identity(l) {
            continue;
        }
        let xr = xi(t, g.range(l))?;
        let xs = xi(t, g.source(l))?;
        let pl = t.embed(1, projection_pi(t, l)?);
        if g.compose(xr, l).is_none() || g.compose(pl, xs).is_none() {
            return Err(Error::Truncation(format!("ξ composite for {} exceeds the bound", g.morphism(l).label)));
        }
        b.set(vec![l], grp.sub(&c.get(&[xr, l]), &c.get(&[pl, xs])));
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionCheck {
    pub pairs_checked: usize,
    pub failure: Option<(MorphId, MorphId)>,
}

impl ReductionCheck {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks `c − δ¹b = π_*(c|_{Λ₁})` on every interior pair.
pub fn verify_reduction<G: Group>(t: &Tower, c: &Cochain<G>) -> Result<ReductionCheck> {
    let g = t.graph();
    let b = b_cochain(t, c)?;
    let lhs = c.sub(&delta(g, &b));
    let pi = all_pi(t)?;
    let grp = &c.group;
    let pairs = composable_tuples(g, 2);
    for p in &pairs {
        let rhs = c.get(&[t.embed(1, pi[p[0]]), t.embed(1, pi[p[1]])]);
        let want = if g.is_identity(p[0]) || g.is_identity(p[1]) { grp.zero() } else { rhs };
        if lhs.get(p) != want {
            return Ok(ReductionCheck { pairs_checked: pairs.len(), failure: Some((p[0], p[1])) });
        }
    }
    Ok(ReductionCheck { pairs_checked: pairs.len(), failure: None })
}

/// `c^k_θ(m, n) = exp(2πi θ m₂ n₁)`, kept in exponent form.
#[derive(Clone, Debug)]
pub struct RotationCocycle {
    pub theta: ThetaSpec,
    pub k: usize,
}

impl RotationCocycle {
    pub fn new(theta: ThetaSpec, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Invalid(format!("rotation cocycles need k ≥ 2, got {k}")));
        }
        Ok(RotationCocycle { theta, k })
    }

    pub fn value(&self, m: &DegreeVector, n: &DegreeVector) -> CirclePoint {
        CirclePoint::theta_multiple(m.0[1] as i64 * n.0[0] as i64)
    }

    /// `d_* c` on a k-graph of the same rank.
    pub fn on_graph(&self, g: &TruncatedKGraph) -> Result<Cochain<CircleTheta>> {
        if g.rank() != self.k {
            return Err(Error::Invalid(format!("graph has rank {}, cocycle has rank {}", g.rank(), self.k)));
        }
        Ok(Cochain::from_fn(g, CircleTheta, 2, |t| self.value(g.degree(t[0]), g.degree(t[1]))))
    }
}

/// A random normalised cochain over `Z/m`.
pub fn random_cochain(g: &TruncatedKGraph, m: u64, arity: usize, rng: &mut impl Rng) -> Cochain<ZMod> {
    Cochain::from_fn(g, ZMod(m), arity, |_| rng.gen_range(0..m))
}

/// A random normalised integer cochain with values in `-bound..=bound`.
pub fn random_integer_cochain(g: &TruncatedKGraph, arity: usize, bound: i64, rng: &mut impl Rng) -> Cochain<Integers> {
    Cochain::from_fn(g, Integers, arity, |_| BigInt::from(rng.gen_range(-bound..=bound)))
}

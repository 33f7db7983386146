//! Graph traces on `Λ_E` and on the derived diagram `F`.
//!
//! A trace `h` on `F` satisfies `h(v) = Σ_{f ∈ vF¹} mult(f) h(s(f))`; it lifts
//! to `Λ_E` as the index-independent function `g((v, j)) = h(v)`. Everything
//! here is exact over the rationals.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::{theta_sign, Rational, ThetaReal, ThetaSpec};
use crate::bratteli::{VertexId, WeightedBratteli};
use crate::error::{Error, Result};
use crate::kgraph::{DegreeVector, LambdaTruncation, TruncatedKGraph};
use crate::ktheory::KZeroClass;

fn rint(n: u64) -> Rational {
    Rational::from(BigInt::from(n))
}

/// `h` on levels `1..=levels()` of `F`, indexed like the diagram.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramTrace {
    pub values: Vec<Vec<Rational>>,
}

impl DiagramTrace {
    pub fn zero(e: &WeightedBratteli, levels: usize) -> Self {
        DiagramTrace { values: (1..=levels).map(|n| vec![Rational::zero(); e.level(n).len()]).collect() }
    }

    pub fn levels(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, v: VertexId) -> &Rational {
        &self.values[v.level - 1][v.index]
    }

    pub fn is_faithful(&self) -> bool {
        self.values.iter().flatten().all(Rational::is_positive)
    }

    /// `vertex TAB value` lines in (level, name) order.
    pub fn render(&self, e: &WeightedBratteli, levels: usize) -> String {
        let mut out = String::new();
        for n in 1..=levels.min(self.levels()) {
            for v in by_name(e, n) {
                out.push_str(&format!("{}\t{}\n", e.name(v), crate::arith::fmt_ratio(self.get(v))));
            }
        }
        out
    }
}

fn by_name(e: &WeightedBratteli, n: usize) -> Vec<VertexId> {
    let mut ids: Vec<VertexId> = e.level_ids(n).collect();
    ids.sort_by(|a, b| e.name(*a).cmp(e.name(*b)));
    ids
}

/// The first vertex where the `F` identity fails, if any.
pub fn check_diagram_trace(e: &WeightedBratteli, h: &DiagramTrace) -> std::result::Result<(), VertexId> {
    for n in 1..h.levels() {
        for v in e.level_ids(n) {
            let sum: Rational = e.children(v).iter().map(|&f| rint(e.ratio(f)) * h.get(e.edge(f).source)).sum();
            if &sum != h.get(v) {
                return Err(v);
            }
        }
    }
    if h.values.iter().flatten().any(Rational::is_negative) {
        let v = e.vertex_ids().find(|&v| v.level <= h.levels() && h.get(v).is_negative()).unwrap();
        return Err(v);
    }
    Ok(())
}

/// `g` on the vertices of a truncated k-graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphTrace {
    pub values: Vec<Rational>,
}

impl GraphTrace {
    pub fn is_faithful(&self) -> bool {
        self.values.iter().all(Rational::is_positive)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceViolation {
    Negative { vertex: usize },
    Identity { vertex: usize, colour: usize },
}

/// `g(v) = Σ_{λ ∈ vΛ^{e_i}} g(s(λ))` wherever `vΛ^{e_i}` is nonempty in
/// the table, plus nonnegativity.
pub fn check_graph_trace(l: &TruncatedKGraph, g: &GraphTrace) -> std::result::Result<(), TraceViolation> {
    for v in 0..l.num_vertices() {
        if g.values[v].is_negative() {
            return Err(TraceViolation::Negative { vertex: v });
        }
    }
    for v in 0..l.num_vertices() {
        for i in 0..l.rank() {
            let out = l.with_range_degree(v, &DegreeVector::unit(l.rank(), i));
            if out.is_empty() {
                continue;
            }
            let sum: Rational = out.iter().map(|&m| g.values[l.source(m)].clone()).sum();
            if sum != g.values[v] {
                return Err(TraceViolation::Identity { vertex: v, colour: i });
            }
        }
    }
    Ok(())
}

/// `g_h((v, j)) = h(v)` on a `Λ_E` table.
pub fn lift_trace(e: &WeightedBratteli, t: &LambdaTruncation, h: &DiagramTrace) -> Result<GraphTrace> {
    if let Err(v) = check_diagram_trace(e, h) {
        return Err(Error::Precondition(format!("not a trace on F at {}", e.name(v))));
    }
    let values = t
        .vertex_keys
        .iter()
        .map(|&(v, _)| {
            if v.level > h.levels() {
                Err(Error::Truncation(format!("trace is not defined at level {}", v.level)))
            } else {
                Ok(h.get(v).clone())
            }
        })
        .collect::<Result<_>>()?;
    Ok(GraphTrace { values })
}

/// `h(v) = g((v, 0))`.
pub fn restrict_trace(e: &WeightedBratteli, t: &LambdaTruncation, g: &GraphTrace) -> DiagramTrace {
    let levels = t.vertex_keys.iter().map(|(v, _)| v.level).max().unwrap_or(0);
    let mut h = DiagramTrace::zero(e, levels);
    for (k, &(v, i)) in t.vertex_keys.iter().enumerate() {
        if i == 0 {
            h.values[v.level - 1][v.index] = g.values[k].clone();
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    None,
    /// `Σ_{v ∈ E⁰₁} w(v) h(v) = 1`, the trace of the corner unit.
    Unit,
}

/// `constant + Σ_k coeffs[k] t_k ≥ 0` for one vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineForm {
    pub vertex: VertexId,
    pub constant: Rational,
    pub coeffs: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub struct TraceSolution {
    /// Free variables set to zero.
    pub particular: DiagramTrace,
    pub generators: Vec<DiagramTrace>,
    pub nonnegativity: Vec<AffineForm>,
    /// The deepest level `n` such that every generator vanishes on levels
    /// `1..=n`; values there are forced.
    pub determined_through: usize,
}

impl TraceSolution {
    pub fn dimension(&self) -> usize {
        self.generators.len()
    }
}

/// Solves the trace equations for levels `< levels` exactly.
pub fn solve_traces(e: &WeightedBratteli, levels: usize, norm: Normalization) -> Result<TraceSolution> {
    if levels == 0 || levels > e.num_levels() {
        return Err(Error::Invalid(format!("level bound {levels} is outside 1..={}", e.num_levels())));
    }
    let vars: Vec<VertexId> = (1..=levels).flat_map(|n| by_name(e, n)).collect();
    let col = |v: VertexId| vars.iter().position(|&x| x == v).unwrap();
    let nv = vars.len();
    // Rows are [coefficients | rhs].
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for n in 1..levels {
        for v in by_name(e, n) {
            let mut r = vec![Rational::zero(); nv + 1];
            r[col(v)] += Rational::one();
            for &f in e.children(v) {
                r[col(e.edge(f).source)] -= rint(e.ratio(f));
            }
            rows.push(r);
        }
    }
    if norm == Normalization::Unit {
        let mut r = vec![Rational::zero(); nv + 1];
        for v in e.level_ids(1) {
            r[col(v)] += rint(e.weight(v));
        }
        r[nv] = Rational::one();
        rows.push(r);
    }
    let pivots = rref(&mut rows, nv);
    if rows.iter().any(|r| r[..nv].iter().all(Zero::is_zero) && !r[nv].is_zero()) {
        return Err(Error::Invalid("normalisation is infeasible: every trace vanishes on level 1".into()));
    }
    let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
    let free: Vec<usize> = (0..nv).filter(|c| !pivot_cols.contains(c)).collect();

    let to_trace = |x: &[Rational]| {
        let mut h = DiagramTrace::zero(e, levels);
        for (k, &v) in vars.iter().enumerate() {
            h.values[v.level - 1][v.index] = x[k].clone();
        }
        h
    };
    let mut particular = vec![Rational::zero(); nv];
    for &(r, c) in &pivots {
        particular[c] = rows[r][nv].clone();
    }
    let mut gens = Vec::new();
    for &f in &free {
        let mut x = vec![Rational::zero(); nv];
        x[f] = Rational::one();
        for &(r, c) in &pivots {
            x[c] = -rows[r][f].clone();
        }
        gens.push(x);
    }
    let nonnegativity = vars
        .iter()
        .enumerate()
        .map(|(k, &v)| AffineForm {
            vertex: v,
            constant: particular[k].clone(),
            coeffs: gens.iter().map(|g| g[k].clone()).collect(),
        })
        .collect();
    let determined_through = (0..=levels)
        .rev()
        .find(|&n| vars.iter().enumerate().all(|(k, v)| v.level > n || gens.iter().all(|g| g[k].is_zero())))
        .unwrap_or(0);
    Ok(TraceSolution {
        particular: to_trace(&particular),
        generators: gens.iter().map(|g| to_trace(g)).collect(),
        nonnegativity,
        determined_through,
    })
}

/// Reduced row echelon form in place; returns `(row, column)` pivots.
fn rref(rows: &mut [Vec<Rational>], ncols: usize) -> Vec<(usize, usize)> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let t = rows[i][c].clone();
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &t * y;
                }
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    pivots
}

/// Checks `g_v(u) = Σ_{e ∈ vE¹} Σ_{p_e(w) = u} g_{s(e)}(w)` for every `v` at
/// a level below the deepest supplied one. `family[v]` lists `g_v` on
/// `Λ_v⁰ = {0, …, w(v) − 1}`.
pub fn compatibility_check(e: &WeightedBratteli, family: &[Vec<Vec<Rational>>]) -> bool {
    for n in 1..family.len() {
        for v in e.level_ids(n) {
            let w = e.weight(v) as usize;
            let mut sums = vec![Rational::zero(); w];
            for &f in e.children(v) {
                let s = e.edge(f).source;
                for (j, x) in family[n][s.index].iter().enumerate() {
                    sums[j % w] += x;
                }
            }
            if sums != family[n - 1][v.index] {
                return false;
            }
        }
    }
    true
}

/// Glues a family `g_v` into a function on the vertices of a `Λ_E` table.
pub fn glue(t: &LambdaTruncation, family: &[Vec<Vec<Rational>>]) -> GraphTrace {
    GraphTrace {
        values: t.vertex_keys.iter().map(|&(v, i)| family[v.level - 1][v.index][i as usize].clone()).collect(),
    }
}

/// `Σ_v (p_v/w(v) + q_v θ) · w(v) h(v)`.
pub fn k0_pairing(e: &WeightedBratteli, h: &DiagramTrace, x: &KZeroClass) -> Result<ThetaReal> {
    if x.level > h.levels() {
        return Err(Error::Truncation(format!("trace is not defined at level {}", x.level)));
    }
    let mut acc = ThetaReal::zero();
    for v in e.level_ids(x.level) {
        let wh = rint(e.weight(v)) * h.get(v);
        acc = acc + x.value_at(e, v.index).scale(&wh);
    }
    Ok(acc)
}

/// Sign of the pairing with `h`. For a faithful trace on a simple diagram
/// this is a fast guess at positivity, never a proof of it.
pub fn pairing_sign_hint(e: &WeightedBratteli, h: &DiagramTrace, x: &KZeroClass, spec: &ThetaSpec) -> Result<i32> {
    Ok(theta_sign(&k0_pairing(e, h, x)?, spec))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroSet {
    pub vertices: BTreeSet<usize>,
    pub hereditary: bool,
    pub saturated: bool,
}

/// `H_g = {v : g(v) = 0}` with its closure properties inside the table.
pub fn zero_set(l: &TruncatedKGraph, g: &GraphTrace) -> ZeroSet {
    let vertices: BTreeSet<usize> = (0..l.num_vertices()).filter(|&v| g.values[v].is_zero()).collect();
    let hereditary = l.morphisms().iter().all(|m| !vertices.contains(&m.range) || vertices.contains(&m.source));
    let saturated = (0..l.num_vertices()).filter(|v| !vertices.contains(v)).all(|v| {
        (0..l.rank()).all(|i| {
            let out = l.with_range_degree(v, &DegreeVector::unit(l.rank(), i));
            out.is_empty() || out.iter().any(|&m| !vertices.contains(&l.source(m)))
        })
    });
    ZeroSet { vertices, hereditary, saturated }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use crate::examples;
    use crate::kgraph::RankThreeGraph;
    use crate::ktheory::{k0_positive, push_a, unit_class, vertex_class, Positivity};
    use proptest::prelude::*;

    fn pow2(k: i64) -> Rational {
        if k >= 0 {
            rat(1 << k, 1)
        } else {
            rat(1, 1 << -k)
        }
    }

    fn table(e: &WeightedBratteli, levels: usize) -> LambdaTruncation {
        RankThreeGraph::new(e.clone()).unwrap().truncate([1, 1, 1], levels).unwrap()
    }

    #[test]
    fn example1_trace_is_unique() {
        let e = examples::example1().extended(5).unwrap();
        let s = solve_traces(&e, 5, Normalization::Unit).unwrap();
        assert_eq!(s.dimension(), 0);
        assert_eq!(s.determined_through, 5);
        for n in 1..=5 {
            assert_eq!(s.particular.get(VertexId::new(n, 0)), &pow2(1 - n as i64));
        }
    }

    #[test]
    fn example3_trace_is_unique_where_determined() {
        let e = examples::example3().extended(6).unwrap();
        let s = solve_traces(&e, 5, Normalization::Unit).unwrap();
        assert_eq!(s.determined_through, 4);
        assert_eq!(s.dimension(), 1);
        for n in 1..=4 {
            for v in e.level_ids(n) {
                assert_eq!(s.particular.get(v), &pow2(-(n as i64) - 1));
            }
        }
        // One more level pins down level 5 too.
        let t = solve_traces(&e, 6, Normalization::Unit).unwrap();
        assert!(t.determined_through >= 5);
    }

    #[test]
    fn example2_has_free_directions() {
        let e = examples::example2().extended(3).unwrap();
        let s = solve_traces(&e, 3, Normalization::Unit).unwrap();
        assert_eq!(s.dimension(), 3);
        assert_eq!(s.determined_through, 1);
        assert_eq!(s.nonnegativity.len(), 7);
    }

    #[test]
    fn level_bound_is_checked() {
        let e = examples::example1();
        assert!(solve_traces(&e, 0, Normalization::Unit).is_err());
        assert!(solve_traces(&e, 1, Normalization::None).unwrap().dimension() == 1);
    }

    #[test]
    fn example1_graph_trace_checks() {
        let e = examples::example1().extended(4).unwrap();
        let t = table(&e, 4);
        let g = GraphTrace { values: t.vertex_keys.iter().map(|(v, _)| pow2(1 - v.level as i64)).collect() };
        assert_eq!(check_graph_trace(&t.graph, &g), Ok(()));
        let zero = GraphTrace { values: vec![Rational::zero(); g.values.len()] };
        assert_eq!(check_graph_trace(&t.graph, &zero), Ok(()));
        let mut bad = g.clone();
        bad.values[3] += rat(1, 1000);
        assert!(check_graph_trace(&t.graph, &bad).is_err());
    }

    #[test]
    fn lift_and_restrict_round_trip() {
        let e = examples::example1().extended(4).unwrap();
        let t = table(&e, 4);
        let h = solve_traces(&e, 4, Normalization::Unit).unwrap().particular;
        let g = lift_trace(&e, &t, &h).unwrap();
        for (k, &(v, _)) in t.vertex_keys.iter().enumerate() {
            assert_eq!(g.values[k], pow2(1 - v.level as i64));
        }
        assert_eq!(restrict_trace(&e, &t, &g), h);
        assert_eq!(lift_trace(&e, &t, &restrict_trace(&e, &t, &g)).unwrap(), g);
        let z = DiagramTrace::zero(&e, 4);
        assert!(lift_trace(&e, &t, &z).unwrap().values.iter().all(Zero::is_zero));
        let mut bad = h.clone();
        bad.values[0][0] = rat(3, 1);
        assert!(lift_trace(&e, &t, &bad).is_err());
    }

    #[test]
    fn compatibility_examples() {
        let e = examples::example3().extended(3).unwrap();
        let h = solve_traces(&examples::example3().extended(4).unwrap(), 4, Normalization::Unit).unwrap().particular;
        let fam: Vec<Vec<Vec<Rational>>> =
            (1..=3).map(|n| e.level_ids(n).map(|v| vec![h.get(v).clone(); e.weight(v) as usize]).collect()).collect();
        assert!(compatibility_check(&e, &fam));
        let t = table(&e, 3);
        assert_eq!(check_graph_trace(&t.graph, &glue(&t, &fam)), Ok(()));
        let mut scaled = fam.clone();
        for x in scaled[1][0].iter_mut() {
            *x *= rat(2, 1);
        }
        assert!(!compatibility_check(&e, &scaled));
        assert!(check_graph_trace(&t.graph, &glue(&t, &scaled)).is_err());
        let zero: Vec<Vec<Vec<Rational>>> =
            fam.iter().map(|l| l.iter().map(|g| vec![Rational::zero(); g.len()]).collect()).collect();
        assert!(compatibility_check(&e, &zero));
    }

    #[test]
    fn pairing_anchors() {
        let e1 = examples::example1().extended(3).unwrap();
        let h = solve_traces(&e1, 3, Normalization::Unit).unwrap().particular;
        let v1 = VertexId::new(1, 0);
        assert_eq!(
            k0_pairing(&e1, &h, &vertex_class(&e1, v1, 0).unwrap()).unwrap(),
            ThetaReal::from_rational(rat(1, 1))
        );
        let rieffel = KZeroClass::single(&e1, v1, 0, 1);
        assert_eq!(k0_pairing(&e1, &h, &rieffel).unwrap(), ThetaReal::theta());
        let v2 = VertexId::new(2, 0);
        assert_eq!(
            k0_pairing(&e1, &h, &vertex_class(&e1, v2, 1).unwrap()).unwrap(),
            ThetaReal::from_rational(h.get(v2).clone())
        );
        let e3 = examples::example3().extended(4).unwrap();
        let h3 = solve_traces(&e3, 4, Normalization::Unit).unwrap().particular;
        assert_eq!(k0_pairing(&e3, &h3, &unit_class(&e3, 1)).unwrap(), ThetaReal::from_rational(rat(1, 1)));
    }

    #[test]
    fn zero_sets() {
        let e = examples::example2().extended(3).unwrap();
        let t = table(&e, 3);
        // Kill the branch under v1.1.
        let mut h = DiagramTrace::zero(&e, 3);
        h.values[0][0] = rat(1, 1);
        let branch = e.find("v1.0").unwrap();
        h.values[1][branch.index] = rat(1, 1);
        for &f in e.children(branch) {
            let s = e.edge(f).source;
            h.values[2][s.index] = rat(1, 2);
        }
        let g = lift_trace(&e, &t, &h).unwrap();
        assert_eq!(check_graph_trace(&t.graph, &g), Ok(()));
        let z = zero_set(&t.graph, &g);
        let dead = e.find("v1.1").unwrap();
        let expect: BTreeSet<usize> = t
            .vertex_keys
            .iter()
            .enumerate()
            .filter(|(_, (v, _))| e.name(*v).starts_with(e.name(dead)))
            .map(|(k, _)| k)
            .collect();
        assert_eq!(z.vertices, expect);
        assert!(z.hereditary && z.saturated);
        let faithful = zero_set(&t.graph, &GraphTrace { values: vec![rat(1, 1); t.graph.num_vertices()] });
        assert!(faithful.vertices.is_empty() && faithful.hereditary && faithful.saturated);
        let all = zero_set(&t.graph, &GraphTrace { values: vec![Rational::zero(); t.graph.num_vertices()] });
        assert_eq!(all.vertices.len(), t.graph.num_vertices());
    }

    #[test]
    fn rendering() {
        let e = examples::example1().extended(3).unwrap();
        let h = solve_traces(&e, 3, Normalization::Unit).unwrap().particular;
        assert_eq!(h.render(&e, 3), "v1\t1/1\nv2\t1/2\nv3\t1/4\n");
    }

    proptest! {
        #[test]
        fn pairing_is_level_consistent(which in 0usize..3, p in -9i64..10, q in -9i64..10, idx in 0usize..4, extra in 0usize..3) {
            let (_, e) = &examples::all()[which];
            let e = e.extended(6).unwrap();
            let s = solve_traces(&e, 6, Normalization::Unit).unwrap();
            let level = 1 + idx % 2;
            let v = VertexId::new(level, idx % e.level(level).len());
            let x = KZeroClass::single(&e, v, p, q);
            let y = push_a(&e, &x, level + extra).unwrap();
            for h in std::iter::once(&s.particular).chain(&s.generators) {
                prop_assert_eq!(k0_pairing(&e, h, &x).unwrap(), k0_pairing(&e, h, &y).unwrap());
            }
        }

        #[test]
        fn hint_matches_positivity_on_example1(p in -30i64..30, q in -30i64..30) {
            let e = examples::example1().extended(4).unwrap();
            let spec = ThetaSpec::sqrt2_minus_1();
            let h = solve_traces(&e, 4, Normalization::Unit).unwrap().particular;
            let x = KZeroClass::single(&e, VertexId::new(1, 0), p, q);
            let hint = pairing_sign_hint(&e, &h, &x, &spec).unwrap();
            let verdict = k0_positive(&e, &x, &spec, 4).unwrap();
            prop_assert_eq!(hint > 0, matches!(verdict, Positivity::PositiveWitnessed(_)) && !x.is_zero());
        }

        #[test]
        fn faithfulness_transfers(a in 0i64..3, b in 0i64..3) {
            // Traces of Example 3 truncated at level 2, spanned by the two
            // level-2 values.
            let e = examples::example3().extended(2).unwrap();
            let t = table(&e, 2);
            let mut h = DiagramTrace::zero(&e, 2);
            h.values[1] = vec![rat(a, 1), rat(b, 1)];
            h.values[0] = vec![rat(a + b, 1), rat(a + b, 1)];
            let g = lift_trace(&e, &t, &h).unwrap();
            prop_assert_eq!(h.is_faithful(), g.is_faithful());
            prop_assert_eq!(check_graph_trace(&t.graph, &g), Ok(()));
        }
    }
}

//! Truncated k-graphs and the 3-graph of a weighted Bratteli diagram.
//!
//! A [`TruncatedKGraph`] is a finite table: every morphism of degree at most
//! a bound, and the composition of every pair whose degrees sum to at most
//! the bound. Construction re-verifies functoriality and the unique
//! factorisation property, so a builder bug cannot produce a table that
//! silently violates them.
//!
//! [`RankThreeGraph`] is the unbounded counterpart for `Λ_E`. A morphism is
//! stored in canonical form `λ = μβ`: a rank-2 part `μ = (a^p b^q, i)` in the
//! cycle graph at the range vertex, followed by a path `β` of green (third
//! colour) edges climbing the diagram. Pushing a rank-2 morphism down through
//! a green edge reduces its index modulo the lower weight, which is all that
//! composition needs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use crate::bratteli::{Edge, EdgeId, Stationary, Vertex, VertexId, WeightedBratteli};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DegreeVector(pub Vec<u32>);

pub fn dv(c: &[u32]) -> DegreeVector {
    DegreeVector(c.to_vec())
}

impl DegreeVector {
    pub fn zero(k: usize) -> Self {
        DegreeVector(vec![0; k])
    }

    /// The generator `e_i` (0-based `i`).
    pub fn unit(k: usize, i: usize) -> Self {
        let mut v = vec![0; k];
        v[i] = 1;
        DegreeVector(v)
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn le(&self, o: &Self) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a <= b)
    }

    pub fn join(&self, o: &Self) -> Self {
        DegreeVector(self.0.iter().zip(&o.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn add(&self, o: &Self) -> Self {
        DegreeVector(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, o: &Self) -> Option<Self> {
        self.0.iter().zip(&o.0).map(|(a, b)| a.checked_sub(*b)).collect::<Option<Vec<_>>>().map(DegreeVector)
    }

    /// Every `m ≤ self`, in lexicographic order.
    pub fn lattice_below(&self) -> Vec<DegreeVector> {
        let mut out = vec![Vec::new()];
        for &c in &self.0 {
            out = out.into_iter().flat_map(|p: Vec<u32>| (0..=c).map(move |x| [p.clone(), vec![x]].concat())).collect();
        }
        out.into_iter().map(DegreeVector).collect()
    }
}

impl fmt::Display for DegreeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub type MorphId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    pub range: usize,
    pub source: usize,
    pub degree: DegreeVector,
    pub label: String,
}

/// Input to [`TruncatedKGraph::from_parts`]: a morphism plus the builder's
/// own key for it, used to look up composites.
pub struct MorphismSpec<K> {
    pub key: K,
    pub morphism: Morphism,
}

#[derive(Clone, Debug)]
pub struct TruncatedKGraph {
    rank: usize,
    bound: DegreeVector,
    vertices: Vec<String>,
    morphisms: Vec<Morphism>,
    identities: Vec<MorphId>,
    composition: HashMap<(MorphId, MorphId), MorphId>,
    factors: HashMap<(MorphId, DegreeVector), (MorphId, MorphId)>,
    by_range: Vec<Vec<MorphId>>,
    by_source: Vec<Vec<MorphId>>,
    by_range_degree: HashMap<(usize, DegreeVector), Vec<MorphId>>,
}

impl TruncatedKGraph {
    /// Assembles a table from enumerated morphisms and a composition rule on
    /// keys, then checks identities, functoriality and unique factorisation
    /// within the bound.
    pub fn from_parts<K, F>(
        rank: usize,
        bound: DegreeVector,
        vertices: Vec<String>,
        specs: Vec<MorphismSpec<K>>,
        compose: F,
    ) -> Result<Self>
    where
        K: Hash + Eq + Clone,
        F: Fn(&K, &K) -> K,
    {
        if bound.rank() != rank {
            return Err(Error::Invalid(format!("bound {bound} is not of rank {rank}")));
        }
        let mut keys = Vec::with_capacity(specs.len());
        let mut morphisms = Vec::with_capacity(specs.len());
        for s in specs {
            if s.morphism.degree.rank() != rank || !s.morphism.degree.le(&bound) {
                return Err(Error::Invalid(format!("morphism {} has degree outside the bound", s.morphism.label)));
            }
            if s.morphism.range >= vertices.len() || s.morphism.source >= vertices.len() {
                return Err(Error::Invalid(format!("morphism {} has a missing endpoint", s.morphism.label)));
            }
            keys.push(s.key);
            morphisms.push(s.morphism);
        }
        let index: HashMap<K, MorphId> = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        if index.len() != keys.len() {
            return Err(Error::Invalid("duplicate morphism keys".into()));
        }

        let mut by_range = vec![Vec::new(); vertices.len()];
        let mut by_source = vec![Vec::new(); vertices.len()];
        let mut by_range_degree: HashMap<(usize, DegreeVector), Vec<MorphId>> = HashMap::new();
        let mut identities = vec![usize::MAX; vertices.len()];
        for (id, m) in morphisms.iter().enumerate() {
            by_range[m.range].push(id);
            by_source[m.source].push(id);
            by_range_degree.entry((m.range, m.degree.clone())).or_default().push(id);
            if m.degree.is_zero() {
                if m.range != m.source || identities[m.range] != usize::MAX {
                    return Err(Error::Invalid(format!("vertex {} needs exactly one identity", vertices[m.range])));
                }
                identities[m.range] = id;
            }
        }
        if let Some(v) = identities.iter().position(|&i| i == usize::MAX) {
            return Err(Error::Invalid(format!("vertex {} has no identity", vertices[v])));
        }

        let mut composition = HashMap::new();
        let mut factors: HashMap<(MorphId, DegreeVector), (MorphId, MorphId)> = HashMap::new();
        for (a, ma) in morphisms.iter().enumerate() {
            for &b in &by_range[ma.source] {
                let mb = &morphisms[b];
                let d = ma.degree.add(&mb.degree);
                if !d.le(&bound) {
                    continue;
                }
                let key = compose(&keys[a], &keys[b]);
                let c = *index.get(&key).ok_or_else(|| {
                    Error::Invalid(format!("composite of {} and {} was not enumerated", ma.label, mb.label))
                })?;
                let mc = &morphisms[c];
                if mc.range != ma.range || mc.source != mb.source || mc.degree != d {
                    return Err(Error::Invalid(format!(
                        "composite of {} and {} is not functorial",
                        ma.label, mb.label
                    )));
                }
                if factors.insert((c, ma.degree.clone()), (a, b)).is_some() {
                    return Err(Error::Invalid(format!("{} factors in two ways at degree {}", mc.label, ma.degree)));
                }
                composition.insert((a, b), c);
            }
        }
        for (c, m) in morphisms.iter().enumerate() {
            for split in m.degree.lattice_below() {
                if !factors.contains_key(&(c, split.clone())) {
                    return Err(Error::Invalid(format!("{} has no factorisation at degree {split}", m.label)));
                }
            }
        }
        Ok(TruncatedKGraph {
            rank,
            bound,
            vertices,
            morphisms,
            identities,
            composition,
            factors,
            by_range,
            by_source,
            by_range_degree,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn bound(&self) -> &DegreeVector {
        &self.bound
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertex_name(&self, v: usize) -> &str {
        &self.vertices[v]
    }

    pub fn vertex_by_name(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn num_morphisms(&self) -> usize {
        self.morphisms.len()
    }

    pub fn morphism(&self, id: MorphId) -> &Morphism {
        &self.morphisms[id]
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn range(&self, id: MorphId) -> usize {
        self.morphisms[id].range
    }

    pub fn source(&self, id: MorphId) -> usize {
        self.morphisms[id].source
    }

    pub fn degree(&self, id: MorphId) -> &DegreeVector {
        &self.morphisms[id].degree
    }

    pub fn identity(&self, v: usize) -> MorphId {
        self.identities[v]
    }

    pub fn is_identity(&self, id: MorphId) -> bool {
        self.morphisms[id].degree.is_zero()
    }

    /// `λμ` when `s(λ) = r(μ)` and `d(λ) + d(μ)` is within the bound.
    pub fn compose(&self, a: MorphId, b: MorphId) -> Option<MorphId> {
        self.composition.get(&(a, b)).copied()
    }

    /// The unique `(μ, ν)` with `λ = μν` and `d(μ) = m`.
    pub fn factor(&self, l: MorphId, m: &DegreeVector) -> Option<(MorphId, MorphId)> {
        self.factors.get(&(l, m.clone())).copied()
    }

    /// `vΛ`.
    pub fn with_range(&self, v: usize) -> &[MorphId] {
        &self.by_range[v]
    }

    /// `Λv`.
    pub fn with_source(&self, v: usize) -> &[MorphId] {
        &self.by_source[v]
    }

    /// `vΛ^m`.
    pub fn with_range_degree(&self, v: usize, m: &DegreeVector) -> &[MorphId] {
        self.by_range_degree.get(&(v, m.clone())).map(Vec::as_slice).unwrap_or(&[])
    }

    /// All composable pairs inside the bound, ordered by ids.
    pub fn composable_pairs(&self) -> Vec<(MorphId, MorphId)> {
        let mut v: Vec<_> = self.composition.keys().copied().collect();
        v.sort();
        v
    }

    /// `vΛ^{≤n}`.
    pub fn boundary_paths(&self, v: usize, n: &DegreeVector) -> Result<Vec<MorphId>> {
        if !n.le(&self.bound) {
            return Err(Error::Truncation(format!("{n} exceeds the bound {}", self.bound)));
        }
        Ok(self.by_range[v]
            .iter()
            .copied()
            .filter(|&l| {
                let d = self.degree(l);
                d.le(n)
                    && (0..self.rank).all(|i| {
                        let e = DegreeVector::unit(self.rank, i);
                        !d.add(&e).le(n) || self.with_range_degree(self.source(l), &e).is_empty()
                    })
            })
            .collect())
    }

    /// Pairs `(α, β)` with `λα = μβ` and `d(λα) = d(λ) ∨ d(μ)`.
    pub fn min_common_ext(&self, l: MorphId, m: MorphId) -> Result<Vec<(MorphId, MorphId)>> {
        if self.range(l) != self.range(m) {
            return Err(Error::Precondition(format!(
                "{} and {} have different ranges",
                self.morphism(l).label,
                self.morphism(m).label
            )));
        }
        let join = self.degree(l).join(self.degree(m));
        if !join.le(&self.bound) {
            return Err(Error::Truncation(format!("{join} exceeds the bound {}", self.bound)));
        }
        let mut out = Vec::new();
        for &rho in self.with_range_degree(self.range(l), &join) {
            let (l2, alpha) = self.factor(rho, self.degree(l)).expect("factorisation verified");
            let (m2, beta) = self.factor(rho, self.degree(m)).expect("factorisation verified");
            if l2 == l && m2 == m {
                out.push((alpha, beta));
            }
        }
        Ok(out)
    }
}

fn letters_label(d: &DegreeVector) -> String {
    if d.is_zero() {
        return "1".into();
    }
    let mut s = String::new();
    for (i, &c) in d.0.iter().enumerate() {
        let letter = (b'a' + i as u8) as char;
        match c {
            0 => {}
            1 => s.push(letter),
            c => s.push_str(&format!("{letter}^{c}")),
        }
    }
    s
}

/// `T_k = N^k` truncated at `bound`: one vertex, one morphism per degree.
pub fn build_torus(k: usize, bound: &DegreeVector) -> Result<TruncatedKGraph> {
    if k == 0 || bound.rank() != k {
        return Err(Error::Invalid(format!("torus of rank {k} needs a rank-{k} bound")));
    }
    let specs = bound
        .lattice_below()
        .into_iter()
        .map(|d| MorphismSpec {
            morphism: Morphism { range: 0, source: 0, degree: d.clone(), label: letters_label(&d) },
            key: d,
        })
        .collect();
    TruncatedKGraph::from_parts(k, bound.clone(), vec!["v".into()], specs, |a, b| a.add(b))
}

/// `Λ ×_η Z/n`: vertices `(v, g)`, `r(λ,g) = (r(λ),g)`, `s(λ,g) = (s(λ), g+η(λ))`.
pub fn skew_product(l: &TruncatedKGraph, eta: &[u64], n: u64) -> Result<TruncatedKGraph> {
    if n == 0 || eta.len() != l.num_morphisms() {
        return Err(Error::Invalid("η must assign a residue to every morphism and n must be positive".into()));
    }
    for (a, b) in l.composable_pairs() {
        let c = l.compose(a, b).unwrap();
        if (eta[a] + eta[b]) % n != eta[c] % n {
            return Err(Error::Invalid(format!(
                "η is not a functor on ({}, {})",
                l.morphism(a).label,
                l.morphism(b).label
            )));
        }
    }
    let nv = l.num_vertices();
    let vid = |v: usize, g: u64| v * n as usize + g as usize;
    let mut vertices = Vec::with_capacity(nv * n as usize);
    for v in 0..nv {
        for g in 0..n {
            vertices.push(format!("({},{g})", l.vertex_name(v)));
        }
    }
    let mut specs = Vec::new();
    for v in 0..nv {
        for g in 0..n {
            for &m in l.with_range(v) {
                let mm = l.morphism(m);
                specs.push(MorphismSpec {
                    key: (m, g),
                    morphism: Morphism {
                        range: vid(v, g),
                        source: vid(mm.source, (g + eta[m]) % n),
                        degree: mm.degree.clone(),
                        label: format!("({},{g})", mm.label),
                    },
                });
            }
        }
    }
    let base = l.clone();
    TruncatedKGraph::from_parts(l.rank(), l.bound().clone(), vertices, specs, move |a: &(MorphId, u64), b| {
        (base.compose(a.0, b.0).expect("composable in the base"), a.1)
    })
}

/// The rank-2 cycle graph `T₂ ×₁ Z/n`, vertices `(v, i)`.
pub fn build_cycle(n: u64, bound: &DegreeVector) -> Result<TruncatedKGraph> {
    if n == 0 || bound.rank() != 2 {
        return Err(Error::Invalid("cycle graphs need n ≥ 1 and a rank-2 bound".into()));
    }
    let t = build_torus(2, bound)?;
    let eta: Vec<u64> = t.morphisms().iter().map(|m| (m.degree.0[0] + m.degree.0[1]) as u64 % n).collect();
    skew_product(&t, &eta, n)
}

/// The path category of a directed graph (a 1-graph), truncated at length
/// `max_len`. Edges are `(source, range)` pairs.
pub fn from_directed_graph(vertices: &[&str], edges: &[(usize, usize)], max_len: u32) -> Result<TruncatedKGraph> {
    let mut specs = Vec::new();
    // Paths as edge lists e1 e2 ... with s(e_i) = r(e_{i+1}).
    let mut layer: Vec<Vec<usize>> = Vec::new();
    for v in 0..vertices.len() {
        specs.push(MorphismSpec {
            key: (v, Vec::new()),
            morphism: Morphism { range: v, source: v, degree: dv(&[0]), label: vertices[v].to_string() },
        });
    }
    for (i, _) in edges.iter().enumerate() {
        layer.push(vec![i]);
    }
    for len in 1..=max_len {
        for p in &layer {
            let range = edges[p[0]].1;
            let source = edges[*p.last().unwrap()].0;
            let label = p.iter().map(|e| format!("e{e}")).collect::<Vec<_>>().join("");
            specs.push(MorphismSpec {
                key: (range, p.clone()),
                morphism: Morphism { range, source, degree: dv(&[len]), label },
            });
        }
        layer = layer
            .iter()
            .flat_map(|p| {
                let s = edges[*p.last().unwrap()].0;
                edges.iter().enumerate().filter(move |(_, e)| e.1 == s).map(move |(i, _)| [p.clone(), vec![i]].concat())
            })
            .collect();
    }
    TruncatedKGraph::from_parts(
        1,
        dv(&[max_len]),
        vertices.iter().map(|s| s.to_string()).collect(),
        specs,
        |a: &(usize, Vec<usize>), b| (a.0, [a.1.clone(), b.1.clone()].concat()),
    )
}

/// Cartesian product `Λ₁ × Λ₂`, a `(k₁ + k₂)`-graph.
pub fn product(a: &TruncatedKGraph, b: &TruncatedKGraph) -> Result<TruncatedKGraph> {
    let nb = b.num_vertices();
    let mut vertices = Vec::new();
    for u in 0..a.num_vertices() {
        for v in 0..nb {
            vertices.push(format!("({},{})", a.vertex_name(u), b.vertex_name(v)));
        }
    }
    let mut specs = Vec::new();
    for (i, ma) in a.morphisms().iter().enumerate() {
        for (j, mb) in b.morphisms().iter().enumerate() {
            specs.push(MorphismSpec {
                key: (i, j),
                morphism: Morphism {
                    range: ma.range * nb + mb.range,
                    source: ma.source * nb + mb.source,
                    degree: DegreeVector([ma.degree.0.clone(), mb.degree.0.clone()].concat()),
                    label: format!("({},{})", ma.label, mb.label),
                },
            });
        }
    }
    let bound = DegreeVector([a.bound().0.clone(), b.bound().0.clone()].concat());
    let (ca, cb) = (a.clone(), b.clone());
    TruncatedKGraph::from_parts(a.rank() + b.rank(), bound, vertices, specs, move |x: &(usize, usize), y| {
        (ca.compose(x.0, y.0).expect("composable"), cb.compose(x.1, y.1).expect("composable"))
    })
}

/// A functor between truncated graphs of the same rank and bound.
#[derive(Clone, Debug)]
pub struct CoveringMap {
    pub domain: Arc<TruncatedKGraph>,
    pub codomain: Arc<TruncatedKGraph>,
    pub vertex_map: Vec<usize>,
    pub morphism_map: Vec<MorphId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `vΓ → p(v)Λ`.
    Out,
    /// `Γv → Λp(v)`.
    In,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoveringFailure {
    MalformedMap,
    DegreeChanged { morphism: String },
    EndpointMismatch { morphism: String },
    NotFunctorial { first: String, second: String },
    NotSurjective { missing: String },
    FiberNotInjective { vertex: String, direction: Direction, image: String },
    FiberNotSurjective { vertex: String, direction: Direction, missing: String },
}

impl fmt::Display for CoveringFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoveringFailure::MalformedMap => write!(f, "map tables do not match the graph sizes"),
            CoveringFailure::DegreeChanged { morphism } => write!(f, "degree not preserved at {morphism}"),
            CoveringFailure::EndpointMismatch { morphism } => write!(f, "range/source not preserved at {morphism}"),
            CoveringFailure::NotFunctorial { first, second } => {
                write!(f, "composition not preserved at ({first}, {second})")
            }
            CoveringFailure::NotSurjective { missing } => write!(f, "{missing} has no preimage"),
            CoveringFailure::FiberNotInjective { vertex, direction, image } => {
                write!(f, "{direction:?} fiber at {vertex}: two morphisms map to {image}")
            }
            CoveringFailure::FiberNotSurjective { vertex, direction, missing } => {
                write!(f, "{direction:?} fiber at {vertex}: {missing} is not hit")
            }
        }
    }
}

impl CoveringMap {
    /// `(x, m) ↦ (x, m mod n)` from `cycle(m_dom)` to `cycle(n)`.
    pub fn cycle_reduction(domain: Arc<TruncatedKGraph>, codomain: Arc<TruncatedKGraph>) -> Result<Self> {
        let (m, n) = (domain.num_vertices(), codomain.num_vertices());
        if domain.rank() != 2 || codomain.rank() != 2 || n == 0 || m % n != 0 || domain.bound() != codomain.bound() {
            return Err(Error::Invalid("cycle reduction needs cycle graphs with n | m and equal bounds".into()));
        }
        let vertex_map: Vec<usize> = (0..m).map(|i| i % n).collect();
        let morphism_map =
            domain.morphisms().iter().map(|mm| codomain.with_range_degree(mm.range % n, &mm.degree)[0]).collect();
        Ok(CoveringMap { domain, codomain, vertex_map, morphism_map })
    }

    pub fn identity(g: Arc<TruncatedKGraph>) -> Self {
        CoveringMap {
            vertex_map: (0..g.num_vertices()).collect(),
            morphism_map: (0..g.num_morphisms()).collect(),
            domain: g.clone(),
            codomain: g,
        }
    }

    pub fn apply(&self, m: MorphId) -> MorphId {
        self.morphism_map[m]
    }

    /// All lifts of `l`, ordered by source vertex.
    pub fn fiber(&self, l: MorphId) -> Vec<MorphId> {
        let mut out: Vec<MorphId> = (0..self.morphism_map.len()).filter(|&m| self.morphism_map[m] == l).collect();
        out.sort_by_key(|&m| (self.domain.source(m), m));
        out
    }

    pub fn verify(&self) -> Result<Vec<CoveringFailure>> {
        let (g, l) = (&*self.domain, &*self.codomain);
        if g.rank() != l.rank() {
            return Err(Error::Invalid(format!("rank {} does not match rank {}", g.rank(), l.rank())));
        }
        let mut out = Vec::new();
        if self.vertex_map.len() != g.num_vertices()
            || self.morphism_map.len() != g.num_morphisms()
            || self.vertex_map.iter().any(|&v| v >= l.num_vertices())
            || self.morphism_map.iter().any(|&m| m >= l.num_morphisms())
        {
            out.push(CoveringFailure::MalformedMap);
            return Ok(out);
        }
        let label = |m: MorphId| g.morphism(m).label.clone();
        for m in 0..g.num_morphisms() {
            let pm = self.morphism_map[m];
            if g.degree(m) != l.degree(pm) {
                out.push(CoveringFailure::DegreeChanged { morphism: label(m) });
            }
            if l.range(pm) != self.vertex_map[g.range(m)] || l.source(pm) != self.vertex_map[g.source(m)] {
                out.push(CoveringFailure::EndpointMismatch { morphism: label(m) });
            }
        }
        for (a, b) in g.composable_pairs() {
            let c = g.compose(a, b).unwrap();
            if l.compose(self.morphism_map[a], self.morphism_map[b]) != Some(self.morphism_map[c]) {
                out.push(CoveringFailure::NotFunctorial { first: label(a), second: label(b) });
            }
        }
        let mut hit = vec![false; l.num_morphisms()];
        for &pm in &self.morphism_map {
            hit[pm] = true;
        }
        if let Some(missing) = hit.iter().position(|&h| !h) {
            out.push(CoveringFailure::NotSurjective { missing: l.morphism(missing).label.clone() });
        }
        for v in 0..g.num_vertices() {
            let pv = self.vertex_map[v];
            for (dir, ours, theirs) in [
                (Direction::Out, g.with_range(v), l.with_range(pv)),
                (Direction::In, g.with_source(v), l.with_source(pv)),
            ] {
                let mut images: BTreeMap<MorphId, usize> = BTreeMap::new();
                for &m in ours {
                    *images.entry(self.morphism_map[m]).or_default() += 1;
                }
                if let Some((&img, _)) = images.iter().find(|(_, &c)| c > 1) {
                    out.push(CoveringFailure::FiberNotInjective {
                        vertex: g.vertex_name(v).into(),
                        direction: dir.clone(),
                        image: l.morphism(img).label.clone(),
                    });
                }
                if let Some(&miss) = theirs.iter().find(|m| !images.contains_key(m)) {
                    out.push(CoveringFailure::FiberNotSurjective {
                        vertex: g.vertex_name(v).into(),
                        direction: dir,
                        missing: l.morphism(miss).label.clone(),
                    });
                }
            }
        }
        Ok(out)
    }
}

/// A morphism of `Λ_E` in canonical form. See the module docs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RankThreeMorphism {
    pub range: VertexId,
    pub range_index: u64,
    pub p: u64,
    pub q: u64,
    /// Edges `α₁ … α_r` with `r(α₁) = range` and `s(α_i) = r(α_{i+1})`.
    pub path: Vec<EdgeId>,
    /// Index of the source vertex, modulo the weight of `s(α_r)`.
    pub source_index: u64,
}

impl RankThreeMorphism {
    pub fn degree(&self) -> [u64; 3] {
        [self.p, self.q, self.path.len() as u64]
    }
}

/// The 3-graph `Λ_E` of a valid weighted Bratteli diagram prefix.
#[derive(Clone, Debug)]
pub struct RankThreeGraph {
    e: WeightedBratteli,
}

impl RankThreeGraph {
    pub fn new(e: WeightedBratteli) -> Result<Self> {
        let report = e.validate();
        if !report.is_empty() {
            return Err(Error::Invalid(report.to_string().trim_end().replace('\n', "; ")));
        }
        Ok(RankThreeGraph { e })
    }

    pub fn diagram(&self) -> &WeightedBratteli {
        &self.e
    }

    fn w(&self, v: VertexId) -> u64 {
        self.e.weight(v)
    }

    pub fn source(&self, l: &RankThreeMorphism) -> (VertexId, u64) {
        let v = l.path.last().map(|&f| self.e.edge(f).source).unwrap_or(l.range);
        (v, l.source_index)
    }

    pub fn identity(&self, v: VertexId, i: u64) -> RankThreeMorphism {
        RankThreeMorphism { range: v, range_index: i, p: 0, q: 0, path: Vec::new(), source_index: i }
    }

    /// `(a^p b^q, i)` inside the cycle graph at `v`.
    pub fn rank2(&self, v: VertexId, i: u64, p: u64, q: u64) -> RankThreeMorphism {
        let w = self.w(v);
        RankThreeMorphism { range: v, range_index: i % w, p, q, path: Vec::new(), source_index: (i + p + q) % w }
    }

    /// The green edge `e((s(f), j), f)` from `(s(f), j)` to `(r(f), j mod w(r(f)))`.
    pub fn green_edge(&self, f: EdgeId, j: u64) -> RankThreeMorphism {
        let Edge { source, range } = self.e.edge(f);
        RankThreeMorphism {
            range,
            range_index: j % self.w(range),
            p: 0,
            q: 0,
            path: vec![f],
            source_index: j % self.w(source),
        }
    }

    pub fn check(&self, l: &RankThreeMorphism) -> Result<()> {
        let w = self.w(l.range);
        if l.range_index >= w {
            return Err(Error::Invalid("range index exceeds the weight".into()));
        }
        let mut at = l.range;
        for &f in &l.path {
            let e = self.e.edge(f);
            if e.range != at {
                return Err(Error::Invalid("green path is not connected".into()));
            }
            at = e.source;
        }
        if l.source_index >= self.w(at) {
            return Err(Error::Invalid("source index exceeds the weight".into()));
        }
        if l.source_index % w != (l.range_index + l.p + l.q) % w {
            return Err(Error::Invalid("source index violates the congruence".into()));
        }
        Ok(())
    }

    pub fn compose(&self, l: &RankThreeMorphism, m: &RankThreeMorphism) -> Result<RankThreeMorphism> {
        if self.source(l) != (m.range, m.range_index) {
            return Err(Error::Precondition("source of the first morphism is not the range of the second".into()));
        }
        // The rank-2 part of m slides down l's green path with its index
        // reduced mod w(range); degrees add, paths concatenate, and the
        // source is m's source.
        Ok(RankThreeMorphism {
            range: l.range,
            range_index: l.range_index,
            p: l.p + m.p,
            q: l.q + m.q,
            path: [l.path.as_slice(), m.path.as_slice()].concat(),
            source_index: m.source_index,
        })
    }

    /// The unique `(μ, ν)` with `λ = μν` and `d(μ) = m`.
    pub fn factorize(&self, l: &RankThreeMorphism, m: [u64; 3]) -> Result<(RankThreeMorphism, RankThreeMorphism)> {
        let d = l.degree();
        if m.iter().zip(&d).any(|(a, b)| a > b) {
            return Err(Error::Precondition(format!("{m:?} is not below {d:?}")));
        }
        let cut = m[2] as usize;
        let mid = if cut == 0 { l.range } else { self.e.edge(l.path[cut - 1]).source };
        let wm = self.w(mid);
        let (rest_p, rest_q) = (l.p - m[0], l.q - m[1]);
        // Index of the middle vertex: ν's range index t satisfies
        // t + rest_p + rest_q ≡ (source index reduced to the middle level).
        let t = ((l.source_index % wm) + wm * ((rest_p + rest_q) / wm + 1) - (rest_p + rest_q) % wm) % wm;
        let mu = RankThreeMorphism {
            range: l.range,
            range_index: l.range_index,
            p: m[0],
            q: m[1],
            path: l.path[..cut].to_vec(),
            source_index: t,
        };
        let nu = RankThreeMorphism {
            range: mid,
            range_index: t,
            p: rest_p,
            q: rest_q,
            path: l.path[cut..].to_vec(),
            source_index: l.source_index,
        };
        Ok((mu, nu))
    }

    /// Paths of `r` edges climbing from `v`, in lexicographic edge order.
    pub fn upward_paths(&self, v: VertexId, r: usize) -> Vec<Vec<EdgeId>> {
        let mut out = vec![Vec::new()];
        for _ in 0..r {
            out = out
                .into_iter()
                .flat_map(|p: Vec<EdgeId>| {
                    let top = p.last().map(|&f| self.e.edge(f).source).unwrap_or(v);
                    self.e.children(top).iter().map(move |&f| [p.clone(), vec![f]].concat()).collect::<Vec<_>>()
                })
                .collect();
        }
        out
    }

    /// Every morphism with range `(v, i)` and degree `(p, q, r)`.
    pub fn enumerate(&self, v: VertexId, i: u64, p: u64, q: u64, r: usize) -> Vec<RankThreeMorphism> {
        let w = self.w(v);
        let base = (i + p + q) % w;
        let mut out = Vec::new();
        for path in self.upward_paths(v, r) {
            let top = path.last().map(|&f| self.e.edge(f).source).unwrap_or(v);
            for j in (base..self.w(top)).step_by(w as usize) {
                out.push(RankThreeMorphism { range: v, range_index: i, p, q, path: path.clone(), source_index: j });
            }
        }
        out
    }

    /// Lifts through `p_f` of the rank-2 morphism `(a^p b^q, i)` at `r(f)`.
    pub fn edge_fiber(&self, f: EdgeId, i: u64, p: u64, q: u64) -> Vec<RankThreeMorphism> {
        let Edge { source, range } = self.e.edge(f);
        let wr = self.w(range);
        (0..self.w(source)).filter(|j| j % wr == i % wr).map(|j| self.rank2(source, j, p, q)).collect()
    }

    /// The finite table of morphisms with degree `≤ bound` whose endpoints
    /// lie at levels `≤ max_level`.
    pub fn truncate(&self, bound: [u32; 3], max_level: usize) -> Result<LambdaTruncation> {
        if max_level > self.e.num_levels() {
            return Err(Error::Truncation(format!("level {max_level} is beyond the diagram prefix")));
        }
        let mut vertex_keys = Vec::new();
        for n in 1..=max_level {
            let mut ids: Vec<VertexId> = self.e.level_ids(n).collect();
            ids.sort_by(|a, b| self.e.name(*a).cmp(self.e.name(*b)));
            for v in ids {
                for i in 0..self.w(v) {
                    vertex_keys.push((v, i));
                }
            }
        }
        let vindex: HashMap<(VertexId, u64), usize> = vertex_keys.iter().enumerate().map(|(k, &x)| (x, k)).collect();
        let mut specs = Vec::new();
        for &(v, i) in &vertex_keys {
            for p in 0..=bound[0] as u64 {
                for q in 0..=bound[1] as u64 {
                    for r in 0..=(bound[2] as usize).min(max_level - v.level) {
                        for l in self.enumerate(v, i, p, q, r) {
                            let src = vindex[&self.source(&l)];
                            let label = self.label(&l);
                            specs.push(MorphismSpec {
                                morphism: Morphism {
                                    range: vindex[&(v, i)],
                                    source: src,
                                    degree: DegreeVector(vec![p as u32, q as u32, r as u32]),
                                    label,
                                },
                                key: l,
                            });
                        }
                    }
                }
            }
        }
        let forms: Vec<RankThreeMorphism> = specs.iter().map(|s| s.key.clone()).collect();
        let names = vertex_keys.iter().map(|&(v, i)| format!("({},{i})", self.e.name(v))).collect();
        let this = self.clone();
        let graph = TruncatedKGraph::from_parts(3, DegreeVector(bound.to_vec()), names, specs, move |a, b| {
            this.compose(a, b).expect("table pairs are composable")
        })?;
        let index = forms.iter().cloned().enumerate().map(|(k, f)| (f, k)).collect();
        Ok(LambdaTruncation { graph, forms, index, vertex_keys, vindex })
    }

    pub fn label(&self, l: &RankThreeMorphism) -> String {
        let mut s = format!("({},{})", self.e.name(l.range), l.range_index);
        if l.p + l.q > 0 {
            s.push(' ');
            s.push_str(&letters_label(&DegreeVector(vec![l.p as u32, l.q as u32])));
        }
        for &f in &l.path {
            s.push_str(&format!(" e[{}]", self.e.edge_label(f)));
        }
        if !l.path.is_empty() || l.p + l.q > 0 {
            let (v, j) = self.source(l);
            s.push_str(&format!(" -> ({},{j})", self.e.name(v)));
        }
        s
    }
}

/// A finite table of `Λ_E` together with the canonical form of each entry.
#[derive(Clone, Debug)]
pub struct LambdaTruncation {
    pub graph: TruncatedKGraph,
    pub forms: Vec<RankThreeMorphism>,
    index: HashMap<RankThreeMorphism, MorphId>,
    pub vertex_keys: Vec<(VertexId, u64)>,
    vindex: HashMap<(VertexId, u64), usize>,
}

impl LambdaTruncation {
    pub fn id_of(&self, l: &RankThreeMorphism) -> Option<MorphId> {
        self.index.get(l).copied()
    }

    pub fn vertex_of(&self, v: VertexId, i: u64) -> Option<usize> {
        self.vindex.get(&(v, i)).copied()
    }
}

/// A linear covering sequence `Λ₁ ← Λ₂ ← ...` of cycle graphs read off a
/// path of `E`, together with the 3-graph it generates.
#[derive(Clone, Debug)]
pub struct Tower {
    pub lambda: RankThreeGraph,
    pub table: LambdaTruncation,
    /// Standalone `Λ_n = cycle(w(v_n))` at the rank-2 bound.
    pub levels: Vec<Arc<TruncatedKGraph>>,
    /// `p_n : Λ_{n+1} → Λ_n`.
    pub coverings: Vec<CoveringMap>,
}

/// Builds the tower along `path` (one vertex per level, starting at level 1).
pub fn tower_from_path(e: &WeightedBratteli, path: &[VertexId], bound: [u32; 3]) -> Result<Tower> {
    if path.is_empty() || path[0].level != 1 {
        return Err(Error::Invalid("tower paths start at level 1".into()));
    }
    let mut edges = Vec::new();
    for (n, pair) in path.windows(2).enumerate() {
        let (lo, hi) = (pair[0], pair[1]);
        if hi.level != n + 2 || !e.children(lo).iter().any(|&f| e.edge(f).source == hi) {
            return Err(Error::Invalid(format!("no edge {} -> {} in the diagram", e.name(hi), e.name(lo))));
        }
        edges.push(Edge { source: VertexId::new(n + 2, 0), range: VertexId::new(n + 1, 0) });
    }
    let levels: Vec<Vec<Vertex>> = path.iter().map(|&v| vec![e.vertex(v).clone()]).collect();
    let chain = WeightedBratteli::new(levels, edges, None::<Stationary>)?;
    let lambda = RankThreeGraph::new(chain)?;
    let table = lambda.truncate(bound, path.len())?;
    let b2 = dv(&bound[..2]);
    let level_graphs = path.iter().map(|&v| build_cycle(e.weight(v), &b2).map(Arc::new)).collect::<Result<Vec<_>>>()?;
    let coverings = level_graphs
        .windows(2)
        .map(|w| CoveringMap::cycle_reduction(w[1].clone(), w[0].clone()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Tower { lambda, table, levels: level_graphs, coverings })
}

impl Tower {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn graph(&self) -> &TruncatedKGraph {
        &self.table.graph
    }

    fn vertex(&self, n: usize) -> VertexId {
        VertexId::new(n, 0)
    }

    /// `ι_n : Λ_n → tower`.
    pub fn embed(&self, n: usize, m: MorphId) -> MorphId {
        let g = &self.levels[n - 1];
        let mm = g.morphism(m);
        let form = self.lambda.rank2(self.vertex(n), mm.range as u64, mm.degree.0[0] as u64, mm.degree.0[1] as u64);
        self.table.id_of(&form).expect("rank-2 morphisms within the bound are tabulated")
    }

    /// `p_{1,n}` applied to a morphism of `Λ_n`.
    pub fn project_to_first(&self, n: usize, mut m: MorphId) -> MorphId {
        for k in (1..n).rev() {
            m = self.coverings[k - 1].apply(m);
        }
        m
    }

    /// The level of a tower vertex.
    pub fn level_of(&self, v: usize) -> usize {
        self.table.vertex_keys[v].0.level
    }

    /// The green edge from a tower vertex at level `n ≥ 2` down to level `n − 1`.
    pub fn connecting_edge(&self, v: usize) -> Option<MorphId> {
        let (vid, j) = self.table.vertex_keys[v];
        if vid.level < 2 {
            return None;
        }
        let f = self.lambda.diagram().parents(vid)[0];
        self.table.id_of(&self.lambda.green_edge(f, j))
    }

    /// Checks the defining properties of the limit 3-graph on every
    /// tabulated morphism: each `Λ_n` embeds functorially as the
    /// `(m, 0)`-degree part at level `n`; vertices split by level; green
    /// edges join `w` at level `n + 1` to `p_n(w)`; and
    /// `e(r(λ)) ι_{n+1}(λ) = ι_n(p_n(λ)) e(s(λ))`.
    pub fn verify_properties(&self) -> std::result::Result<(), String> {
        let g = self.graph();
        for n in 1..=self.num_levels() {
            let ln = &self.levels[n - 1];
            for (a, b) in ln.composable_pairs() {
                let c = ln.compose(a, b).unwrap();
                if g.compose(self.embed(n, a), self.embed(n, b)) != Some(self.embed(n, c)) {
                    return Err(format!(
                        "ι_{n} is not functorial at ({}, {})",
                        ln.morphism(a).label,
                        ln.morphism(b).label
                    ));
                }
            }
            let rank2_at_level =
                g.morphisms().iter().filter(|m| m.degree.0[2] == 0 && self.level_of(m.range) == n).count();
            if rank2_at_level != ln.num_morphisms() {
                return Err(format!(
                    "level {n} has {rank2_at_level} rank-2 morphisms, Λ_{n} has {}",
                    ln.num_morphisms()
                ));
            }
        }
        let e3 = dv(&[0, 0, 1]);
        for v in 0..g.num_vertices() {
            let n = self.level_of(v);
            let outgoing: Vec<MorphId> = g.with_source(v).iter().copied().filter(|&m| g.degree(m) == &e3).collect();
            if n == 1 {
                if !outgoing.is_empty() {
                    return Err("a level-1 vertex is the source of a green edge".into());
                }
                continue;
            }
            if g.bound().0[2] == 0 {
                continue;
            }
            let [edge] = outgoing.as_slice() else {
                return Err(format!("vertex {} must source exactly one green edge", g.vertex_name(v)));
            };
            let target = self.coverings[n - 2].vertex_map[self.table.vertex_keys[v].1 as usize];
            if self.table.vertex_keys[g.range(*edge)] != (self.vertex(n - 1), target as u64) {
                return Err(format!("green edge from {} lands off p_{}", g.vertex_name(v), n - 1));
            }
        }
        if g.bound().0[2] == 0 {
            return Ok(());
        }
        for n in 1..self.num_levels() {
            let upper = &self.levels[n];
            let p = &self.coverings[n - 1];
            for lam in 0..upper.num_morphisms() {
                let el = self.connecting_edge(self.vertex_index(n + 1, upper.range(lam))).unwrap();
                let es = self.connecting_edge(self.vertex_index(n + 1, upper.source(lam))).unwrap();
                let lhs = g.compose(el, self.embed(n + 1, lam));
                let rhs = g.compose(self.embed(n, p.apply(lam)), es);
                if lhs.is_none() || lhs != rhs {
                    return Err(format!("commutation fails for {} at level {}", upper.morphism(lam).label, n + 1));
                }
            }
        }
        Ok(())
    }

    /// Tower vertex id of `(v_n, i)`.
    pub fn vertex_index(&self, n: usize, i: usize) -> usize {
        self.table.vertex_of(self.vertex(n), i as u64).expect("vertex within the tower")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use proptest::prelude::*;

    #[test]
    fn torus_counts() {
        let t = build_torus(2, &dv(&[1, 1])).unwrap();
        assert_eq!(t.num_morphisms(), 4);
        assert_eq!(build_torus(1, &dv(&[3])).unwrap().num_morphisms(), 4);
        let top = t.with_range_degree(0, &dv(&[1, 1]))[0];
        let (mu, nu) = t.factor(top, &dv(&[1, 0])).unwrap();
        assert_eq!((t.degree(mu), t.degree(nu)), (&dv(&[1, 0]), &dv(&[0, 1])));
    }

    #[test]
    fn double_cycle_edges() {
        let c = build_cycle(2, &dv(&[1, 1])).unwrap();
        assert_eq!(c.num_vertices(), 2);
        assert_eq!(c.num_morphisms(), 8);
        let blue: Vec<&str> =
            c.morphisms().iter().filter(|m| m.degree == dv(&[1, 0])).map(|m| m.label.as_str()).collect();
        assert_eq!(blue, vec!["(a,0)", "(a,1)"]);
        let one = build_cycle(1, &dv(&[1, 1])).unwrap();
        assert_eq!(one.num_vertices(), 1);
        let a = one.with_range_degree(0, &dv(&[1, 0]))[0];
        assert_eq!(one.source(a), 0);
        for v in 0..c.num_vertices() {
            for m in c.bound().lattice_below() {
                assert_eq!(c.with_range_degree(v, &m).len(), 1);
            }
        }
    }

    #[test]
    fn skew_with_trivial_group_copies_the_base() {
        let t = build_torus(2, &dv(&[2, 1])).unwrap();
        let s = skew_product(&t, &vec![0; t.num_morphisms()], 1).unwrap();
        assert_eq!((s.num_vertices(), s.num_morphisms()), (1, t.num_morphisms()));
        let bad = vec![1; t.num_morphisms()];
        assert!(skew_product(&t, &bad, 5).is_err());
    }

    #[test]
    fn construction_rejects_broken_tables() {
        // Two parallel loops of degree 1 with composites identified: the
        // degree-2 morphism then factors twice.
        let specs = vec![
            MorphismSpec { key: 0u8, morphism: Morphism { range: 0, source: 0, degree: dv(&[0]), label: "v".into() } },
            MorphismSpec { key: 1, morphism: Morphism { range: 0, source: 0, degree: dv(&[1]), label: "x".into() } },
            MorphismSpec { key: 2, morphism: Morphism { range: 0, source: 0, degree: dv(&[1]), label: "y".into() } },
            MorphismSpec { key: 3, morphism: Morphism { range: 0, source: 0, degree: dv(&[2]), label: "z".into() } },
        ];
        let r = TruncatedKGraph::from_parts(1, dv(&[2]), vec!["v".into()], specs, |a, b| match (a, b) {
            (0, x) | (x, 0) => *x,
            _ => 3,
        });
        assert!(r.is_err());
    }

    #[test]
    fn boundary_paths_examples() {
        let c = build_cycle(2, &dv(&[1, 1])).unwrap();
        for v in 0..2 {
            let got = c.boundary_paths(v, &dv(&[1, 1])).unwrap();
            assert_eq!(got, c.with_range_degree(v, &dv(&[1, 1])).to_vec());
        }
        let t = build_torus(2, &dv(&[1, 1])).unwrap();
        assert_eq!(t.boundary_paths(0, &dv(&[0, 0])).unwrap(), vec![t.identity(0)]);
        // u <- w with w a source: paths from u of length ≤ 2 stop at w.
        let g = from_directed_graph(&["u", "w"], &[(1, 0), (0, 0)], 2).unwrap();
        let lp = g.boundary_paths(0, &dv(&[2])).unwrap();
        let labels: Vec<&str> = lp.iter().map(|&m| g.morphism(m).label.as_str()).collect();
        assert_eq!(labels, vec!["e0", "e1e0", "e1e1"]);
    }

    #[test]
    fn min_common_ext_examples() {
        let c = build_cycle(2, &dv(&[1, 1])).unwrap();
        let a0 = c.with_range_degree(0, &dv(&[1, 0]))[0];
        let b0 = c.with_range_degree(0, &dv(&[0, 1]))[0];
        let ext = c.min_common_ext(a0, b0).unwrap();
        let labels: Vec<(&str, &str)> =
            ext.iter().map(|&(x, y)| (c.morphism(x).label.as_str(), c.morphism(y).label.as_str())).collect();
        assert_eq!(labels, vec![("(b,1)", "(a,1)")]);
        assert_eq!(c.min_common_ext(a0, a0).unwrap(), vec![(c.identity(1), c.identity(1))]);
        let a1 = c.with_range_degree(1, &dv(&[1, 0]))[0];
        assert!(c.min_common_ext(a0, a1).is_err());
    }

    fn covering_4_2(bound: &[u32]) -> CoveringMap {
        let b = dv(bound);
        CoveringMap::cycle_reduction(Arc::new(build_cycle(4, &b).unwrap()), Arc::new(build_cycle(2, &b).unwrap()))
            .unwrap()
    }

    #[test]
    fn covering_examples() {
        let p = covering_4_2(&[2, 2]);
        assert!(p.verify().unwrap().is_empty());
        assert!(CoveringMap::identity(p.codomain.clone()).verify().unwrap().is_empty());
        let mut collapse = p.clone();
        collapse.vertex_map = vec![0; 4];
        collapse.morphism_map =
            p.domain.morphisms().iter().map(|m| p.codomain.with_range_degree(0, &m.degree)[0]).collect();
        assert!(!collapse.verify().unwrap().is_empty());
        let t3 = Arc::new(build_torus(3, &dv(&[1, 1, 1])).unwrap());
        let bad = CoveringMap { domain: t3, codomain: p.codomain.clone(), vertex_map: vec![], morphism_map: vec![] };
        assert!(bad.verify().is_err());
    }

    #[test]
    fn fibers_of_cycle_reduction() {
        let p = covering_4_2(&[3, 1]);
        let (dom, cod) = (&p.domain, &p.codomain);
        let fib: Vec<&str> = p.fiber(cod.identity(0)).iter().map(|&m| dom.morphism(m).label.as_str()).collect();
        assert_eq!(fib, vec!["(1,0)", "(1,2)"]);
        // ν_0 μ_0^{l-1} has degree (l n - 1, 1) = (3, 1).
        let nu = cod.with_range_degree(0, &dv(&[3, 1]))[0];
        let lifts = p.fiber(nu);
        assert_eq!(lifts.len(), 2);
        let ranges: Vec<usize> = lifts.iter().map(|&m| dom.range(m)).collect();
        assert_eq!(ranges, vec![0, 2]);
    }

    fn ex1_lambda(levels: usize) -> RankThreeGraph {
        RankThreeGraph::new(examples::example1().extended(levels).unwrap()).unwrap()
    }

    #[test]
    fn compose_example() {
        let g = ex1_lambda(3);
        let v1 = VertexId::new(1, 0);
        let f = g.diagram().children(v1)[0];
        let loop_a = g.rank2(v1, 0, 1, 0);
        let edge = g.green_edge(f, 1);
        assert_eq!(g.source(&edge), (VertexId::new(2, 0), 1));
        let c = g.compose(&loop_a, &edge).unwrap();
        assert_eq!(c.degree(), [1, 0, 1]);
        assert_eq!((c.range, c.range_index), (v1, 0));
        assert_eq!(g.source(&c), (VertexId::new(2, 0), 1));
        assert_eq!(g.compose(&g.identity(v1, 0), &c).unwrap(), c);
        assert!(g.compose(&edge, &loop_a).is_err());
    }

    #[test]
    fn factorize_examples() {
        let g = ex1_lambda(3);
        let v1 = VertexId::new(1, 0);
        for l in g.enumerate(v1, 0, 1, 1, 1) {
            let (mu, nu) = g.factorize(&l, [1, 1, 0]).unwrap();
            assert_eq!(mu, g.rank2(v1, 0, 1, 1));
            assert_eq!(nu.degree(), [0, 0, 1]);
            assert_eq!(g.compose(&mu, &nu).unwrap(), l);
            let (id, same) = g.factorize(&l, [0, 0, 0]).unwrap();
            assert_eq!((id, same), (g.identity(v1, 0), l.clone()));
            let (same, id) = g.factorize(&l, l.degree()).unwrap();
            let (s, j) = g.source(&l);
            assert_eq!((same, id), (l.clone(), g.identity(s, j)));
            assert!(g.factorize(&l, [2, 0, 0]).is_err());
        }
    }

    #[test]
    fn tower_of_example_chain() {
        let e = examples::example1().extended(3).unwrap();
        let path: Vec<VertexId> = (1..=3).map(|n| VertexId::new(n, 0)).collect();
        let t = tower_from_path(&e, &path, [1, 1, 2]).unwrap();
        assert_eq!(t.graph().num_vertices(), 7);
        let e3 = dv(&[0, 0, 1]);
        let per_level =
            |n: usize| t.graph().morphisms().iter().filter(|m| m.degree == e3 && t.level_of(m.range) == n).count();
        assert_eq!((per_level(1), per_level(2)), (2, 4));
        t.verify_properties().unwrap();
        let bad = [VertexId::new(1, 0), VertexId::new(3, 0)];
        assert!(tower_from_path(&e, &bad, [1, 1, 1]).is_err());
    }

    #[test]
    fn towers_on_other_examples_satisfy_the_properties() {
        let e3 = examples::example3().extended(3).unwrap();
        let path: Vec<VertexId> = vec![VertexId::new(1, 0), VertexId::new(2, 1), VertexId::new(3, 0)];
        tower_from_path(&e3, &path, [2, 2, 2]).unwrap().verify_properties().unwrap();
        let e = examples::example1().extended(4).unwrap();
        let path: Vec<VertexId> = (1..=4).map(|n| VertexId::new(n, 0)).collect();
        tower_from_path(&e, &path, [2, 1, 3]).unwrap().verify_properties().unwrap();
    }

    type SkeletonEdge = (usize, (VertexId, u64), (VertexId, u64));

    /// Skeleton edges as (colour, source, range) over vertices `(v, i)`.
    fn skeleton(e: &WeightedBratteli, levels: usize) -> Vec<SkeletonEdge> {
        let mut out = Vec::new();
        for n in 1..=levels {
            for v in e.level_ids(n) {
                let w = e.weight(v);
                for i in 0..w {
                    out.push((0, (v, (i + 1) % w), (v, i)));
                    out.push((1, (v, (i + 1) % w), (v, i)));
                }
                if n < levels {
                    for &f in e.children(v) {
                        let s = e.edge(f).source;
                        for j in 0..e.weight(s) {
                            out.push((2, (s, j), (v, j % w)));
                        }
                    }
                }
            }
        }
        out
    }

    /// Counts coloured skeleton paths from `start` following the colour word.
    fn count_words(sk: &[SkeletonEdge], start: (VertexId, u64), word: &[usize]) -> usize {
        let mut frontier = vec![start];
        for &c in word {
            frontier = frontier
                .iter()
                .flat_map(|&x| sk.iter().filter(move |(col, _, r)| *col == c && *r == x).map(|(_, s, _)| *s))
                .collect();
        }
        frontier.len()
    }

    #[test]
    fn canonical_counts_match_skeleton_paths_in_every_colour_order() {
        for (e, levels) in [
            (examples::example1().extended(3).unwrap(), 3),
            (examples::example3().extended(3).unwrap(), 3),
            (examples::example2().extended(3).unwrap(), 3),
        ] {
            let g = RankThreeGraph::new(e.clone()).unwrap();
            let sk = skeleton(&e, levels);
            for v in e.vertex_ids() {
                for i in 0..e.weight(v) {
                    for (p, q, r) in [(1, 0, 1), (1, 1, 1), (2, 1, 2), (0, 2, 1), (1, 1, 0)] {
                        if v.level + r > levels {
                            continue;
                        }
                        let want = g.enumerate(v, i, p as u64, q as u64, r).len();
                        let mut word: Vec<usize> = [vec![0; p], vec![1; q], vec![2; r]].concat();
                        assert_eq!(count_words(&sk, (v, i), &word), want);
                        word.reverse();
                        assert_eq!(count_words(&sk, (v, i), &word), want);
                        // Formula: sum over climbing paths of the weight ratio.
                        let formula: u64 = g
                            .upward_paths(v, r)
                            .iter()
                            .map(|path| {
                                path.last().map(|&f| e.weight(e.edge(f).source)).unwrap_or(e.weight(v)) / e.weight(v)
                            })
                            .sum();
                        assert_eq!(want as u64, formula);
                    }
                }
            }
        }
    }

    #[test]
    fn skeleton_words_compose_to_distinct_morphisms() {
        // Composing edge-by-edge along words of a fixed colour order is a
        // bijection onto the morphisms of that degree.
        let e = examples::example1().extended(3).unwrap();
        let g = RankThreeGraph::new(e.clone()).unwrap();
        let v1 = VertexId::new(1, 0);
        let mut seen = std::collections::BTreeSet::new();
        let f1 = e.children(v1)[0];
        let f2 = e.children(VertexId::new(2, 0))[0];
        for j in 0..2u64 {
            for k in (0..4u64).filter(|k| k % 2 == (j + 1) % 2) {
                // green(j) · blue at (v2, j) · green(k) from (v3, k)
                let x = g.compose(&g.green_edge(f1, j), &g.rank2(VertexId::new(2, 0), j, 1, 0)).unwrap();
                let y = g.compose(&x, &g.green_edge(f2, k)).unwrap();
                assert!(seen.insert(y));
            }
        }
        assert_eq!(seen.len(), g.enumerate(v1, 0, 1, 0, 2).len());
    }

    fn arb_tower_morphisms() -> impl Strategy<Value = (usize, usize, usize)> {
        (0usize..10_000, 0usize..10_000, 0usize..10_000)
    }

    proptest! {
        #[test]
        fn compose_is_associative_and_factorize_inverts(seed in arb_tower_morphisms()) {
            let g = ex1_lambda(4);
            let t = g.truncate([2, 2, 3], 4).unwrap();
            let n = t.forms.len();
            let a = &t.forms[seed.0 % n];
            // Choose composable partners via the table.
            let bs = t.graph.with_range(t.graph.source(seed.0 % n));
            let b_id = bs[seed.1 % bs.len()];
            let b = &t.forms[b_id];
            let cs = t.graph.with_range(t.graph.source(b_id));
            let c = &t.forms[cs[seed.2 % cs.len()]];
            let left = g.compose(&g.compose(a, b).unwrap(), c).unwrap();
            let right = g.compose(a, &g.compose(b, c).unwrap()).unwrap();
            prop_assert_eq!(&left, &right);
            g.check(&left).unwrap();
            let d = left.degree();
            for m0 in 0..=d[0] { for m1 in 0..=d[1] { for m2 in 0..=d[2] {
                let (mu, nu) = g.factorize(&left, [m0, m1, m2]).unwrap();
                g.check(&mu).unwrap();
                g.check(&nu).unwrap();
                prop_assert_eq!(g.compose(&mu, &nu).unwrap(), left.clone());
            }}}
        }
    }
}

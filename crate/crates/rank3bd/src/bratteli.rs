//! Weighted Bratteli diagrams.
//!
//! Levels are numbered from 1. An edge goes from a source at level `n + 1`
//! to a range at level `n`; in files this is `{"from": source, "to": range}`.
//! For a vertex `v`, `vE¹` is the set of edges with range `v` (the vertex's
//! children one level up) and `E¹v` the set of edges with source `v`.
//!
//! A diagram is a finite prefix plus an optional stationary declaration that
//! says how to continue it. Two kinds are supported:
//!
//! * `block`: from level `k` on, the levels repeat with period `p` in vertex
//!   count and edge pattern, while weights are multiplied by one uniform
//!   integer factor per period (so weight ratios along edges repeat).
//! * `branching`: from level `k` on, every vertex has the same ordered list
//!   of children, given by their weight ratios, and every child has a single
//!   parent. Binary trees are of this kind.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    /// 1-based level.
    pub level: usize,
    /// Position within the level.
    pub index: usize,
}

impl VertexId {
    pub fn new(level: usize, index: usize) -> Self {
        VertexId { level, index }
    }
}

pub type EdgeId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vertex {
    pub name: String,
    pub weight: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub source: VertexId,
    pub range: VertexId,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationaryKind {
    #[default]
    Block,
    Branching,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stationary {
    pub start_level: usize,
    pub period: usize,
    #[serde(default, skip_serializing_if = "is_block")]
    pub kind: StationaryKind,
}

fn is_block(k: &StationaryKind) -> bool {
    *k == StationaryKind::Block
}

#[derive(Serialize, Deserialize)]
struct EdgeFile {
    from: String,
    to: String,
}

#[derive(Serialize, Deserialize)]
struct DiagramFile {
    levels: Vec<Vec<Vertex>>,
    edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stationary: Option<Stationary>,
}

/// A weighted Bratteli diagram `E` with weight map `w`.
#[derive(Clone, Debug)]
pub struct WeightedBratteli {
    levels: Vec<Vec<Vertex>>,
    edges: Vec<Edge>,
    stationary: Option<Stationary>,
    children: Vec<Vec<Vec<EdgeId>>>,
    parents: Vec<Vec<Vec<EdgeId>>>,
    names: HashMap<String, VertexId>,
}

impl WeightedBratteli {
    /// Builds a diagram from levels and `(source, range)` edges. Fails on
    /// structural nonsense (unknown vertices, edges skipping levels, zero
    /// weights, duplicate names); the semantic invariants are left to
    /// [`WeightedBratteli::validate`].
    pub fn new(levels: Vec<Vec<Vertex>>, edges: Vec<Edge>, stationary: Option<Stationary>) -> Result<Self> {
        let mut names = HashMap::new();
        for (l, level) in levels.iter().enumerate() {
            for (i, v) in level.iter().enumerate() {
                if v.weight == 0 {
                    return Err(Error::Parse(format!("vertex {} has weight 0", v.name)));
                }
                if names.insert(v.name.clone(), VertexId::new(l + 1, i)).is_some() {
                    return Err(Error::Parse(format!("duplicate vertex name {}", v.name)));
                }
            }
        }
        let mut children: Vec<Vec<Vec<EdgeId>>> = levels.iter().map(|l| vec![Vec::new(); l.len()]).collect();
        let mut parents = children.clone();
        for (id, e) in edges.iter().enumerate() {
            for v in [e.source, e.range] {
                if v.level == 0 || v.level > levels.len() || v.index >= levels[v.level - 1].len() {
                    return Err(Error::Parse(format!("edge {id} refers to a missing vertex")));
                }
            }
            if e.source.level != e.range.level + 1 {
                return Err(Error::Parse(format!(
                    "edge {} -> {} must join level n+1 to level n",
                    levels[e.source.level - 1][e.source.index].name,
                    levels[e.range.level - 1][e.range.index].name
                )));
            }
            children[e.range.level - 1][e.range.index].push(id);
            parents[e.source.level - 1][e.source.index].push(id);
        }
        for per_vertex in children.iter_mut().flatten() {
            per_vertex.sort_by_key(|&id| edges[id].source);
        }
        for per_vertex in parents.iter_mut().flatten() {
            per_vertex.sort_by_key(|&id| edges[id].range);
        }
        Ok(WeightedBratteli { levels, edges, stationary, children, parents, names })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DiagramFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut names = HashMap::new();
        for (l, level) in file.levels.iter().enumerate() {
            for (i, v) in level.iter().enumerate() {
                names.insert(v.name.clone(), VertexId::new(l + 1, i));
            }
        }
        let lookup = |n: &str| names.get(n).copied().ok_or_else(|| Error::Parse(format!("unknown vertex {n:?}")));
        let edges = file
            .edges
            .iter()
            .map(|e| Ok(Edge { source: lookup(&e.from)?, range: lookup(&e.to)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.levels, edges, file.stationary)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = DiagramFile {
            levels: self.levels.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeFile { from: self.name(e.source).to_string(), to: self.name(e.range).to_string() })
                .collect(),
            stationary: self.stationary,
        };
        serde_json::to_string_pretty(&file).expect("diagram serializes")
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> &[Vertex] {
        &self.levels[n - 1]
    }

    pub fn level_ids(&self, n: usize) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.levels[n - 1].len()).map(move |i| VertexId::new(n, i))
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> + '_ {
        (1..=self.levels.len()).flat_map(move |n| self.level_ids(n))
    }

    pub fn vertex(&self, v: VertexId) -> &Vertex {
        &self.levels[v.level - 1][v.index]
    }

    pub fn weight(&self, v: VertexId) -> u64 {
        self.vertex(v).weight
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.vertex(v).name
    }

    pub fn find(&self, name: &str) -> Option<VertexId> {
        self.names.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> Edge {
        self.edges[id]
    }

    pub fn stationary(&self) -> Option<Stationary> {
        self.stationary
    }

    /// `vE¹`: edges with range `v`, ordered by source.
    pub fn children(&self, v: VertexId) -> &[EdgeId] {
        &self.children[v.level - 1][v.index]
    }

    /// `E¹v`: edges with source `v`, ordered by range.
    pub fn parents(&self, v: VertexId) -> &[EdgeId] {
        &self.parents[v.level - 1][v.index]
    }

    /// `w(s(e)) / w(r(e))`, assuming divisibility.
    pub fn ratio(&self, e: EdgeId) -> u64 {
        let e = self.edges[e];
        self.weight(e.source) / self.weight(e.range)
    }

    pub fn edge_label(&self, e: EdgeId) -> String {
        let e = self.edges[e];
        format!("{}->{}", self.name(e.source), self.name(e.range))
    }

    /// Edges from level `n + 1` down to level `n`, in id order.
    pub fn edges_below(&self, n: usize) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].range.level == n)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut seen = HashSet::new();
        for (id, e) in self.edges.iter().enumerate() {
            if !seen.insert((e.source, e.range)) {
                violations.push(Violation::MultipleEdges {
                    source: self.name(e.source).into(),
                    range: self.name(e.range).into(),
                });
            }
            if !self.weight(e.source).is_multiple_of(self.weight(e.range)) {
                violations.push(Violation::Divisibility {
                    edge: self.edge_label(id),
                    range_weight: self.weight(e.range),
                    source_weight: self.weight(e.source),
                });
            }
        }
        // The last level of a prefix has no children inside the prefix; a
        // stationary declaration supplies them, otherwise it is a cut.
        for v in self.vertex_ids() {
            if v.level < self.num_levels() && self.children(v).is_empty() {
                violations.push(Violation::NotEmitting { vertex: self.name(v).into() });
            }
            if v.level > 1 && self.parents(v).is_empty() {
                violations.push(Violation::NotReceiving { vertex: self.name(v).into() });
            }
        }
        if let Some(st) = self.stationary {
            if let Err(msg) = self.check_stationary(st) {
                violations.push(Violation::Stationary { message: msg });
            }
        }
        ValidationReport { violations }
    }

    fn check_stationary(&self, st: Stationary) -> std::result::Result<(), String> {
        let (k, p) = (st.start_level, st.period);
        if k == 0 || p == 0 {
            return Err("start_level and period must be positive".into());
        }
        if self.num_levels() < k + p {
            return Err(format!("needs at least {} levels to exhibit the repeating block", k + p));
        }
        match st.kind {
            StationaryKind::Block => {
                let scale = self.block_scale(st)?;
                for l in k + p + 1..=self.num_levels() {
                    self.check_block_level(l, l - p, scale)?;
                }
                Ok(())
            }
            StationaryKind::Branching => {
                if p != 1 {
                    return Err("branching declarations have period 1".into());
                }
                let profile = self.branching_profile(k)?;
                for l in k..self.num_levels() {
                    for v in self.level_ids(l) {
                        if self.child_ratios(v) != profile {
                            return Err(format!("vertex {} departs from the branching pattern", self.name(v)));
                        }
                    }
                }
                for l in k + 1..=self.num_levels() {
                    for v in self.level_ids(l) {
                        if self.parents(v).len() != 1 {
                            return Err(format!("vertex {} must have exactly one parent", self.name(v)));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn block_scale(&self, st: Stationary) -> std::result::Result<u64, String> {
        let (k, p) = (st.start_level, st.period);
        let (a, b) = (self.level(k), self.level(k + p));
        if a.len() != b.len() {
            return Err(format!("levels {k} and {} differ in size", k + p));
        }
        let scale = b[0].weight / a[0].weight;
        if scale == 0 || a.iter().zip(b).any(|(x, y)| y.weight != scale * x.weight) {
            return Err(format!("weights at level {} are not a uniform multiple of level {k}", k + p));
        }
        Ok(scale)
    }

    fn check_block_level(&self, l: usize, t: usize, scale: u64) -> std::result::Result<(), String> {
        let (a, b) = (self.level(t), self.level(l));
        if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| y.weight != scale * x.weight) {
            return Err(format!("level {l} does not repeat level {t}"));
        }
        let pattern = |n: usize| -> BTreeSet<(usize, usize)> {
            self.edges_below(n - 1).map(|e| (self.edges[e].source.index, self.edges[e].range.index)).collect()
        };
        if pattern(l) != pattern(t) {
            return Err(format!("edges into level {l} do not repeat those into level {t}"));
        }
        Ok(())
    }

    fn child_ratios(&self, v: VertexId) -> Vec<u64> {
        self.children(v).iter().map(|&e| self.ratio(e)).collect()
    }

    fn branching_profile(&self, k: usize) -> std::result::Result<Vec<u64>, String> {
        let first = VertexId::new(k, 0);
        let profile = self.child_ratios(first);
        if profile.is_empty() {
            return Err("branching vertices must have children".into());
        }
        Ok(profile)
    }

    /// A diagram with at least `n` levels, unrolling the stationary
    /// declaration when the prefix is too short.
    pub fn extended(&self, n: usize) -> Result<WeightedBratteli> {
        if n <= self.num_levels() {
            return Ok(self.clone());
        }
        let st = self.stationary.ok_or_else(|| {
            Error::Precondition(format!(
                "{n} levels requested but the diagram has {} and no stationary declaration",
                self.num_levels()
            ))
        })?;
        self.check_stationary(st).map_err(Error::Invalid)?;
        let mut levels = self.levels.clone();
        let mut edges = self.edges.clone();
        let mut taken: HashSet<String> = self.names.keys().cloned().collect();
        match st.kind {
            StationaryKind::Block => {
                let scale = self.block_scale(st).map_err(Error::Invalid)?;
                for l in self.num_levels() + 1..=n {
                    let t = l - st.period;
                    let new_level: Vec<Vertex> = levels[t - 1]
                        .iter()
                        .map(|v| Vertex { name: fresh_name(&v.name, l, &mut taken), weight: v.weight * scale })
                        .collect();
                    levels.push(new_level);
                    let layer: Vec<Edge> = edges
                        .iter()
                        .filter(|e| e.source.level == t)
                        .map(|e| Edge {
                            source: VertexId::new(l, e.source.index),
                            range: VertexId::new(l - 1, e.range.index),
                        })
                        .collect();
                    edges.extend(layer);
                }
            }
            StationaryKind::Branching => {
                let profile = self.branching_profile(st.start_level).map_err(Error::Invalid)?;
                for l in self.num_levels() + 1..=n {
                    let mut new_level = Vec::new();
                    for (pi, parent) in levels[l - 2].iter().enumerate() {
                        for (c, r) in profile.iter().enumerate() {
                            let mut name = format!("{}.{c}", parent.name);
                            while !taken.insert(name.clone()) {
                                name.push('\'');
                            }
                            edges.push(Edge {
                                source: VertexId::new(l, new_level.len()),
                                range: VertexId::new(l - 1, pi),
                            });
                            new_level.push(Vertex { name, weight: parent.weight * r });
                        }
                    }
                    levels.push(new_level);
                }
            }
        }
        WeightedBratteli::new(levels, edges, self.stationary)
    }

    /// The first `n` levels only; the stationary declaration is kept when
    /// the shorter prefix still exhibits it.
    pub fn truncated(&self, n: usize) -> WeightedBratteli {
        let n = n.min(self.num_levels());
        let levels = self.levels[..n].to_vec();
        let edges = self.edges.iter().copied().filter(|e| e.source.level <= n).collect();
        let stationary = self.stationary.filter(|st| st.start_level + st.period <= n);
        WeightedBratteli::new(levels, edges, stationary).expect("prefix of a well-formed diagram")
    }

    /// The derived multiplicity diagram `F`.
    pub fn derived_f(&self) -> MultiplicityBratteli {
        MultiplicityBratteli {
            levels: self.levels.iter().map(|l| l.iter().map(|v| v.name.clone()).collect()).collect(),
            edges: (0..self.edges.len())
                .map(|e| MultEdge {
                    source: self.edges[e].source,
                    range: self.edges[e].range,
                    multiplicity: self.ratio(e),
                })
                .collect(),
        }
    }

    /// `|E⁰₁E*v|`, the number of paths from level 1 to `v`.
    pub fn path_count(&self, v: VertexId) -> BigUint {
        let mut counts: Vec<BigUint> = vec![BigUint::one(); self.level(1).len()];
        for n in 2..=v.level {
            counts = self
                .level_ids(n)
                .map(|u| self.parents(u).iter().map(|&e| counts[self.edges[e].range.index].clone()).sum())
                .collect();
        }
        counts[v.index].clone()
    }

    /// Descendants of `v`, by level, from `v.level` to `last`.
    fn descendants(&self, v: VertexId, last: usize) -> Vec<Vec<bool>> {
        let mut out = vec![vec![false; self.level(v.level).len()]];
        out[0][v.index] = true;
        for n in v.level..last {
            let cur = out.last().unwrap();
            let mut next = vec![false; self.level(n + 1).len()];
            for u in self.level_ids(n).filter(|u| cur[u.index]) {
                for &e in self.children(u) {
                    next[self.edges[e].source.index] = true;
                }
            }
            out.push(next);
        }
        out
    }

    pub fn cofinality(&self, depth: usize) -> Result<Cofinality> {
        if depth == 0 {
            return Err(Error::Precondition("depth must be positive".into()));
        }
        if let Some(st) = self.stationary {
            self.check_stationary(st).map_err(Error::Invalid)?;
            if let Some(evidence) = self.stationary_obstruction(st)? {
                return Ok(Cofinality::NotCofinalWitnessed(evidence));
            }
            // Cofinal: a uniform witness exists, search for the least one.
            let mut horizon = 2 * depth + 2;
            loop {
                let ext = self.extended(horizon)?;
                if let Some(n) = ext.uniform_witness(depth, horizon) {
                    return Ok(Cofinality::CofinalWitnessed(n));
                }
                if horizon > 4096 {
                    return Ok(Cofinality::Unknown);
                }
                horizon *= 2;
            }
        }
        if depth > self.num_levels() {
            return Err(Error::Precondition(format!(
                "depth {depth} exceeds the {} available levels",
                self.num_levels()
            )));
        }
        Ok(match self.uniform_witness(depth, self.num_levels()) {
            Some(n) => Cofinality::CofinalWitnessed(n),
            None => Cofinality::Unknown,
        })
    }

    /// Least `n` with `s(v'Eⁿ) ⊆ s(vE*)` for all vertices `v, v'` at levels
    /// `≤ depth`, looking no further than level `horizon`.
    fn uniform_witness(&self, depth: usize, horizon: usize) -> Option<usize> {
        let verts: Vec<VertexId> = (1..=depth).flat_map(|n| self.level_ids(n)).collect();
        let desc: BTreeMap<VertexId, Vec<Vec<bool>>> =
            verts.iter().map(|&v| (v, self.descendants(v, horizon))).collect();
        (0..=horizon - depth).find(|&n| {
            verts.iter().all(|v| {
                verts.iter().all(|w| {
                    let target = w.level + n;
                    if target < v.level {
                        return false;
                    }
                    let reach = &desc[w][n];
                    let dv = &desc[v][target - v.level];
                    reach.iter().zip(dv).all(|(&r, &d)| !r || d)
                })
            })
        })
    }

    /// Exact non-cofinality test for stationary diagrams: some vertex `v`
    /// admits an infinite path avoiding all of its descendants.
    fn stationary_obstruction(&self, st: Stationary) -> Result<Option<NonCofinalEvidence>> {
        let effective = match st.kind {
            StationaryKind::Branching => {
                let profile = self.branching_profile(st.start_level).map_err(Error::Invalid)?;
                if profile.len() >= 2 {
                    let ext = self.extended(st.start_level + 1)?;
                    let parent = VertexId::new(st.start_level, 0);
                    let kids = ext.children(parent);
                    let a = ext.edges[kids[0]].source;
                    let b = ext.edges[kids[1]].source;
                    return Ok(Some(NonCofinalEvidence {
                        vertex: ext.name(a).into(),
                        avoider: ext.name(b).into(),
                        reason: "sibling subtrees of a branching pattern never meet".into(),
                    }));
                }
                Stationary { start_level: st.start_level, period: 1, kind: StationaryKind::Block }
            }
            StationaryKind::Block => st,
        };
        let (k, p) = (effective.start_level, effective.period);
        // Finite graph on levels 1..k+p-1; children at level k+p fold onto level k.
        let top = k + p - 1;
        let fold = |n: usize| if n > top { n - p } else { n };
        let next = |x: VertexId| -> Vec<VertexId> {
            let mut out: Vec<VertexId> = self
                .children(x)
                .iter()
                .map(|&e| VertexId::new(fold(x.level + 1), self.edges[e].source.index))
                .collect();
            out.sort();
            out.dedup();
            out
        };
        let step = |set: &BTreeSet<VertexId>| -> BTreeSet<VertexId> { set.iter().flat_map(|&x| next(x)).collect() };
        for start in (1..=top).flat_map(|n| self.level_ids(n)) {
            // Deterministic orbit of descendant sets, until it repeats.
            let mut orbit: Vec<BTreeSet<VertexId>> = vec![BTreeSet::from([start])];
            let mut seen: HashMap<BTreeSet<VertexId>, usize> = HashMap::new();
            seen.insert(orbit[0].clone(), 0);
            let loop_to = loop {
                let s = step(orbit.last().unwrap());
                if let Some(&i) = seen.get(&s) {
                    break i;
                }
                seen.insert(s.clone(), orbit.len());
                orbit.push(s);
            };
            let succ_t = |t: usize| if t + 1 == orbit.len() { loop_to } else { t + 1 };
            // Product graph on (t, x) with x outside the descendant set; look
            // for a cycle with an iterative DFS.
            let level_of = |t: usize| orbit[t].iter().next().unwrap().level;
            let mut nodes: Vec<(usize, VertexId)> = Vec::new();
            for t in 0..orbit.len() {
                for x in self.level_ids(level_of(t)) {
                    if !orbit[t].contains(&x) {
                        nodes.push((t, x));
                    }
                }
            }
            let index: HashMap<(usize, VertexId), usize> = nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect();
            let adj: Vec<Vec<usize>> = nodes
                .iter()
                .map(|&(t, x)| {
                    let t2 = succ_t(t);
                    next(x).into_iter().filter_map(|y| index.get(&(t2, y)).copied()).collect()
                })
                .collect();
            if let Some(i) = find_cycle(&adj) {
                let (t, x) = nodes[i];
                // Name the avoider at its concrete level.
                let concrete = start.level + t;
                let ext = self.extended(concrete)?;
                return Ok(Some(NonCofinalEvidence {
                    vertex: self.name(start).into(),
                    avoider: ext.name(VertexId::new(concrete, x.index)).into(),
                    reason: "an infinite path from the avoider misses every descendant".into(),
                }));
            }
        }
        Ok(None)
    }
}

/// Returns a node lying on a directed cycle, if any.
fn find_cycle(adj: &[Vec<usize>]) -> Option<usize> {
    // Kahn's algorithm: nodes never removed lie on or lead to a cycle; walk
    // forward inside the remainder until a node repeats.
    let n = adj.len();
    let mut indeg = vec![0usize; n];
    for outs in adj {
        for &j in outs {
            indeg[j] += 1;
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(i) = queue.pop_front() {
        removed[i] = true;
        for &j in &adj[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                queue.push_back(j);
            }
        }
    }
    let mut cur = (0..n).find(|&i| !removed[i])?;
    let mut visited = vec![false; n];
    while !visited[cur] {
        visited[cur] = true;
        cur = *adj[cur].iter().find(|&&j| !removed[j]).expect("remaining nodes have remaining predecessors");
    }
    Some(cur)
}

fn fresh_name(template: &str, level: usize, taken: &mut HashSet<String>) -> String {
    let stem = template.trim_end_matches(|c: char| c.is_ascii_digit());
    let mut name = if stem.is_empty() || stem.len() == template.len() {
        format!("{template}@{level}")
    } else {
        format!("{stem}{level}")
    };
    while !taken.insert(name.clone()) {
        name.push('\'');
    }
    name
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    MultipleEdges { source: String, range: String },
    Divisibility { edge: String, range_weight: u64, source_weight: u64 },
    NotEmitting { vertex: String },
    NotReceiving { vertex: String },
    Stationary { message: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MultipleEdges { source, range } => {
                write!(f, "not singly connected: more than one edge {source}->{range}")
            }
            Violation::Divisibility { edge, range_weight, source_weight } => {
                write!(f, "divisibility fails on edge {edge}: {range_weight} does not divide {source_weight}")
            }
            Violation::NotEmitting { vertex } => write!(f, "vertex {vertex} has no edge from the next level"),
            Violation::NotReceiving { vertex } => write!(f, "vertex {vertex} has no edge to the previous level"),
            Violation::Stationary { message } => write!(f, "stationary declaration: {message}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonCofinalEvidence {
    pub vertex: String,
    pub avoider: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cofinality {
    CofinalWitnessed(usize),
    NotCofinalWitnessed(NonCofinalEvidence),
    Unknown,
}

impl fmt::Display for Cofinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cofinality::CofinalWitnessed(n) => write!(f, "CofinalWitnessed({n})"),
            Cofinality::NotCofinalWitnessed(e) => {
                write!(f, "NotCofinalWitnessed(descendants of {} never absorb {}: {})", e.vertex, e.avoider, e.reason)
            }
            Cofinality::Unknown => write!(f, "Unknown"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultEdge {
    pub source: VertexId,
    pub range: VertexId,
    pub multiplicity: u64,
}

/// The diagram `F`: the vertices of `E`, one edge per edge of `E`, with
/// multiplicity `w(s(e))/w(r(e))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityBratteli {
    pub levels: Vec<Vec<String>>,
    pub edges: Vec<MultEdge>,
}

impl MultiplicityBratteli {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// `vF¹` with multiplicities.
    pub fn children(&self, v: VertexId) -> impl Iterator<Item = &MultEdge> + '_ {
        self.edges.iter().filter(move |e| e.range == v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Highest level drawn; defaults to every level of the prefix.
    pub levels: Option<usize>,
}

/// The weighted diagram itself, one node per vertex labelled by its weight.
pub fn dot_weighted(e: &WeightedBratteli, opts: &DotOptions) -> String {
    let top = opts.levels.unwrap_or(e.num_levels()).min(e.num_levels());
    let mut out = String::from("digraph E {\n  rankdir=RL;\n  node [shape=circle];\n");
    for n in 1..=top {
        let mut ids: Vec<VertexId> = e.level_ids(n).collect();
        ids.sort_by(|a, b| e.name(*a).cmp(e.name(*b)));
        let _ = write!(out, "  {{ rank=same;");
        for v in &ids {
            let _ = write!(out, " \"{}\";", e.name(*v));
        }
        out.push_str(" }\n");
        for v in ids {
            let _ = writeln!(out, "  \"{}\" [label=\"{}\\nw={}\"];", e.name(v), e.name(v), e.weight(v));
        }
    }
    let mut edges: Vec<(usize, &str, &str)> = e
        .edges()
        .iter()
        .filter(|x| x.source.level <= top)
        .map(|x| (x.source.level, e.name(x.source), e.name(x.range)))
        .collect();
    edges.sort();
    for (_, s, r) in edges {
        let _ = writeln!(out, "  \"{s}\" -> \"{r}\";");
    }
    out.push_str("}\n");
    out
}

/// The skeleton of the 3-graph: vertices `(v, i)`, blue and red cycle edges
/// inside each block and green connecting edges between levels.
pub fn dot_skeleton(e: &WeightedBratteli, opts: &DotOptions) -> String {
    let top = opts.levels.unwrap_or(e.num_levels()).min(e.num_levels());
    let node = |v: VertexId, i: u64| format!("\"{}#{}\"", e.name(v), i);
    let mut out = String::from("digraph LambdaE {\n  rankdir=RL;\n  node [shape=point];\n");
    let sorted = |n: usize| {
        let mut ids: Vec<VertexId> = e.level_ids(n).collect();
        ids.sort_by(|a, b| e.name(*a).cmp(e.name(*b)));
        ids
    };
    for n in 1..=top {
        for v in sorted(n) {
            for i in 0..e.weight(v) {
                let _ = writeln!(out, "  {} [xlabel=\"({},{})\"];", node(v, i), e.name(v), i);
            }
        }
    }
    for n in 1..=top {
        for v in sorted(n) {
            let w = e.weight(v);
            for (color, label) in [("blue", "a"), ("red", "b")] {
                for i in 0..w {
                    let _ = writeln!(
                        out,
                        "  {} -> {} [color={color}, label=\"({label},{i})\"];",
                        node(v, (i + 1) % w),
                        node(v, i)
                    );
                }
            }
        }
    }
    for n in 1..top {
        for r in sorted(n) {
            for &f in e.children(r) {
                let s = e.edge(f).source;
                for j in 0..e.weight(s) {
                    let _ = writeln!(out, "  {} -> {} [color=green];", node(s, j), node(r, j % e.weight(r)));
                }
            }
        }
    }
    out.push_str("}\n");
    out
}

/// A random valid diagram with up to `max_width` vertices per level, weights
/// built by multiplying a parent weight by 1..=3.
pub fn random_diagram(seed: u64, levels: usize, max_width: usize) -> WeightedBratteli {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut lv: Vec<Vec<Vertex>> = Vec::new();
    let mut edges = Vec::new();
    let width0 = rng.gen_range(1..=max_width);
    lv.push((0..width0).map(|i| Vertex { name: format!("x1_{i}"), weight: rng.gen_range(1..=2) }).collect());
    for n in 2..=levels {
        let prev = &lv[n - 2];
        let width = rng.gen_range(1..=max_width);
        let mut cur = Vec::new();
        let mut covered = vec![false; prev.len()];
        for i in 0..width {
            let mut ranges: Vec<usize> = (0..prev.len()).filter(|_| rng.gen_bool(0.5)).collect();
            // Make sure every previous vertex gets a child.
            if i == width - 1 {
                ranges.extend((0..prev.len()).filter(|&j| !covered[j]));
            }
            if ranges.is_empty() {
                ranges.push(rng.gen_range(0..prev.len()));
            }
            ranges.sort();
            ranges.dedup();
            let lcm = ranges.iter().fold(1u64, |acc, &j| num_integer::lcm(acc, prev[j].weight));
            for &j in &ranges {
                covered[j] = true;
                edges.push(Edge { source: VertexId::new(n, i), range: VertexId::new(n - 1, j) });
            }
            cur.push(Vertex { name: format!("x{n}_{i}"), weight: lcm * rng.gen_range(1..=2) });
        }
        lv.push(cur);
    }
    WeightedBratteli::new(lv, edges, None).unwrap()
}

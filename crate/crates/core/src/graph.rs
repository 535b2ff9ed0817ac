//! Graph topology, observations and hidden ground truth.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};

/// Dense vertex index in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId(i as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Bijection between external labels and dense ids.
#[derive(Debug, Clone)]
pub enum LabelMap {
    /// Label of vertex `i` is the decimal string of `i`.
    Identity(usize),
    Named {
        labels: Vec<String>,
        index: HashMap<String, VertexId>,
    },
}

impl LabelMap {
    pub fn len(&self) -> usize {
        match self {
            LabelMap::Identity(n) => *n,
            LabelMap::Named { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn label(&self, v: VertexId) -> std::borrow::Cow<'_, str> {
        match self {
            LabelMap::Identity(_) => v.0.to_string().into(),
            LabelMap::Named { labels, .. } => labels[v.index()].as_str().into(),
        }
    }

    pub fn lookup(&self, label: &str) -> Option<VertexId> {
        match self {
            LabelMap::Identity(n) => label
                .parse::<usize>()
                .ok()
                .filter(|i| i < n)
                .map(VertexId::from),
            LabelMap::Named { index, .. } => index.get(label).copied(),
        }
    }
}

/// Counts of input edges dropped while building a simple graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub edges: usize,
    pub duplicates_dropped: usize,
    pub loops_dropped: usize,
}

/// How repeated input edges (including reversed copies) are treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DuplicatePolicy {
    #[default]
    Merge,
    Reject,
}

/// Immutable simple undirected graph in CSR form.
///
/// Neighbor lists are strictly ascending and symmetric; there are no loops.
#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    labels: LabelMap,
}

impl Graph {
    /// Builds a graph over `n` vertices from raw (possibly repeated, looped,
    /// or reversed) edges.
    pub fn from_edges(
        n: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
        labels: LabelMap,
        policy: DuplicatePolicy,
    ) -> Result<(Graph, IngestReport)> {
        if n == 0 {
            return Err(ScanError::EmptyGraph);
        }
        if n > u32::MAX as usize {
            return Err(ScanError::invalid(format!("too many vertices: {n}")));
        }
        debug_assert_eq!(labels.len(), n);
        let mut report = IngestReport::default();
        let mut pairs: Vec<u64> = Vec::new();
        for (u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(ScanError::invalid(format!("edge ({u}, {v}) out of range")));
            }
            if u == v {
                report.loops_dropped += 1;
                continue;
            }
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            pairs.push(((lo as u64) << 32) | hi as u64);
        }
        pairs.sort_unstable();
        let before = pairs.len();
        if policy == DuplicatePolicy::Reject {
            if let Some(w) = pairs.windows(2).find(|w| w[0] == w[1]) {
                let (u, v) = split(w[0]);
                return Err(ScanError::DuplicateEdge(
                    labels.label(VertexId(u)).into_owned(),
                    labels.label(VertexId(v)).into_owned(),
                ));
            }
        }
        pairs.dedup();
        report.duplicates_dropped = before - pairs.len();
        report.edges = pairs.len();

        let mut degree = vec![0usize; n];
        for &p in &pairs {
            let (u, v) = split(p);
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0u32; offsets[n]];
        for &p in &pairs {
            let (u, v) = split(p);
            targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            targets[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        // Pairs are sorted by (lo, hi), which already leaves every list
        // ascending; sort anyway so the invariant does not hinge on that.
        for v in 0..n {
            targets[offsets[v]..offsets[v + 1]].sort_unstable();
        }
        Ok((
            Graph {
                offsets,
                targets,
                labels,
            },
            report,
        ))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.offsets[v.index() + 1] - self.offsets[v.index()]
    }

    /// Ascending neighbor ids of `v` as raw indices.
    #[inline]
    pub fn neighbors_raw(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn neighbors(&self, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
        self.neighbors_raw(v.0).iter().map(|&u| VertexId(u))
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.neighbors_raw(u.0).binary_search(&v.0).is_ok()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.n() as u32).map(VertexId)
    }

    /// Canonical edge list: each edge once as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices().flat_map(move |u| {
            self.neighbors_raw(u.0)
                .iter()
                .filter(move |&&v| v > u.0)
                .map(move |&v| (u, VertexId(v)))
        })
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    /// Checks symmetry, ordering and absence of loops.
    pub fn validate(&self) -> Result<()> {
        for u in 0..self.n() as u32 {
            let adj = self.neighbors_raw(u);
            if adj.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScanError::invalid(format!("adjacency of {u} not strictly sorted")));
            }
            for &v in adj {
                if v == u {
                    return Err(ScanError::invalid(format!("self-loop at {u}")));
                }
                if self.neighbors_raw(v).binary_search(&u).is_err() {
                    return Err(ScanError::invalid(format!("edge ({u}, {v}) is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Size of the connected component of every vertex.
    pub fn component_sizes(&self) -> Vec<usize> {
        let n = self.n();
        let mut comp = vec![u32::MAX; n];
        let mut sizes = Vec::new();
        let mut queue = Vec::new();
        for s in 0..n {
            if comp[s] != u32::MAX {
                continue;
            }
            let id = sizes.len() as u32;
            comp[s] = id;
            queue.clear();
            queue.push(s as u32);
            let mut head = 0;
            while head < queue.len() {
                let u = queue[head];
                head += 1;
                for &w in self.neighbors_raw(u) {
                    if comp[w as usize] == u32::MAX {
                        comp[w as usize] = id;
                        queue.push(w);
                    }
                }
            }
            sizes.push(queue.len());
        }
        comp.into_iter().map(|c| sizes[c as usize]).collect()
    }
}

fn split(p: u64) -> (u32, u32) {
    ((p >> 32) as u32, p as u32)
}

/// A graph together with per-vertex observations `X_v`.
///
/// The topology is shared; replacing observations is cheap.
#[derive(Debug, Clone)]
pub struct AttributedGraph {
    graph: Arc<Graph>,
    observed: Option<Arc<[f64]>>,
}

impl AttributedGraph {
    pub fn new(graph: Graph) -> Self {
        Self {
            graph: Arc::new(graph),
            observed: None,
        }
    }

    pub fn from_shared(graph: Arc<Graph>) -> Self {
        Self {
            graph,
            observed: None,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Returns a copy carrying `x` as observations; topology is shared.
    pub fn set_observations(&self, x: Vec<f64>) -> Result<AttributedGraph> {
        if x.len() != self.n() {
            return Err(ScanError::LengthMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(ScanError::NonFinite { index });
        }
        Ok(AttributedGraph {
            graph: Arc::clone(&self.graph),
            observed: Some(x.into()),
        })
    }

    pub fn observations(&self) -> Result<&[f64]> {
        self.observed.as_deref().ok_or(ScanError::ObservationsUnset)
    }
}

impl std::ops::Deref for AttributedGraph {
    type Target = Graph;

    fn deref(&self) -> &Graph {
        &self.graph
    }
}

/// Hidden activities: inactive vertices sit at `a`, active ones at `>= b > a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub a: f64,
    pub b: f64,
    pub activity: Vec<f64>,
    pub active: Vec<bool>,
}

impl GroundTruth {
    /// Two-level truth: `A_v = a` when inactive, `A_v = b` when active.
    pub fn two_level(a: f64, b: f64, active: Vec<bool>) -> Result<Self> {
        let activity = active.iter().map(|&x| if x { b } else { a }).collect();
        let t = GroundTruth {
            a,
            b,
            activity,
            active,
        };
        t.audit()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn is_active(&self, v: VertexId) -> bool {
        self.active[v.index()]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&x| x).count()
    }

    /// Checks `b > a`, `A_v = a` on inactive and `A_v >= b` on active vertices.
    pub fn audit(&self) -> Result<()> {
        if !(self.b > self.a) {
            return Err(ScanError::Separation(format!(
                "need b > a, got a={} b={}",
                self.a, self.b
            )));
        }
        if self.activity.len() != self.active.len() {
            return Err(ScanError::LengthMismatch {
                expected: self.active.len(),
                got: self.activity.len(),
            });
        }
        for (i, (&x, &act)) in self.activity.iter().zip(&self.active).enumerate() {
            if act && !(x >= self.b) {
                return Err(ScanError::Separation(format!(
                    "active vertex {i} has A_v={x} < b={}",
                    self.b
                )));
            }
            if !act && x != self.a {
                return Err(ScanError::Separation(format!(
                    "inactive vertex {i} has A_v={x} != a={}",
                    self.a
                )));
            }
        }
        Ok(())
    }
}

//! BFS neighborhoods: descendance layers, full and exact `m`-neighborhoods,
//! and the one-neighborhood-per-vertex family scanned by the estimators.
//!
//! Layer `i` of a root holds the vertices at hop distance exactly `i`. The
//! full `m`-neighborhood is the smallest ball `Ω_r` with at least `m`
//! vertices; the exact `m`-neighborhood keeps `Ω_{r-1}` and fills up to `m`
//! with the smallest ids of layer `r`. Neighbor lists are ascending and the
//! truncation is by id, so every neighborhood is a pure function of
//! `(graph, root, m)`.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, ScanError};
use crate::graph::{AttributedGraph, Graph, VertexId};
use crate::parallel::with_workers;

/// BFS layers of a root, computed until the ball reaches the target size or
/// the component runs out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayeredNeighborhood {
    pub root: VertexId,
    /// `layers[i]` is the ascending set of vertices at distance `i`.
    pub layers: Vec<Vec<VertexId>>,
    /// `cumulative_sizes[i] = |Ω_i|`.
    pub cumulative_sizes: Vec<usize>,
    /// The whole component was consumed before reaching the target size.
    pub exhausted: bool,
}

impl LayeredNeighborhood {
    pub fn radius(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn reached(&self) -> usize {
        *self.cumulative_sizes.last().unwrap()
    }

    /// `Ω_i`, ascending.
    pub fn ball(&self, i: usize) -> Vec<VertexId> {
        let mut out: Vec<VertexId> = self.layers[..=i].iter().flatten().copied().collect();
        out.sort_unstable();
        out
    }
}

/// An `m`-subset of `Ω_r(root)` containing `Ω_{r-1}(root)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactNeighborhood {
    pub root: VertexId,
    /// Ascending member ids.
    pub members: Vec<VertexId>,
    /// Radius `r` of the full neighborhood the members were cut from.
    pub inner_radius: usize,
    /// The members taken from layer `r` (ascending).
    pub truncated_last_layer: Vec<VertexId>,
}

impl ExactNeighborhood {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.members.binary_search(&v).is_ok()
    }
}

pub fn bfs_layers(g: &Graph, root: VertexId, m: usize) -> Result<LayeredNeighborhood> {
    if m == 0 {
        return Err(ScanError::invalid("neighborhood size must be at least 1"));
    }
    if root.index() >= g.n() {
        return Err(ScanError::invalid(format!("vertex {root} out of range")));
    }
    let mut seen = vec![false; g.n()];
    seen[root.index()] = true;
    let mut layers = vec![vec![root]];
    let mut cumulative_sizes = vec![1];
    while *cumulative_sizes.last().unwrap() < m {
        let mut next = Vec::new();
        for &u in layers.last().unwrap() {
            for w in g.neighbors(u) {
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return Ok(LayeredNeighborhood {
                root,
                layers,
                cumulative_sizes,
                exhausted: true,
            });
        }
        next.sort_unstable();
        cumulative_sizes.push(cumulative_sizes.last().unwrap() + next.len());
        layers.push(next);
    }
    Ok(LayeredNeighborhood {
        root,
        layers,
        cumulative_sizes,
        exhausted: false,
    })
}

pub fn exact_neighborhood(layers: &LayeredNeighborhood, m: usize) -> Result<ExactNeighborhood> {
    let r = layers
        .cumulative_sizes
        .iter()
        .position(|&c| c >= m)
        .ok_or(ScanError::InsufficientComponent {
            root: layers.root.index(),
            reachable: layers.reached(),
            m,
        })?;
    let inner = if r == 0 { 0 } else { layers.cumulative_sizes[r - 1] };
    let truncated: Vec<VertexId> = layers.layers[r][..m - inner].to_vec();
    let mut members: Vec<VertexId> = layers.layers[..r].iter().flatten().copied().collect();
    members.extend_from_slice(&truncated);
    members.sort_unstable();
    Ok(ExactNeighborhood {
        root: layers.root,
        members,
        inner_radius: r,
        truncated_last_layer: truncated,
    })
}

/// Work done while building one exact neighborhood.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct VisitCost {
    /// Vertices discovered, i.e. `|Ω_r(root)|`.
    pub visited: usize,
    /// Adjacency entries inspected while expanding layers `0..r`.
    pub edge_checks: usize,
}

/// Reusable per-worker BFS state for the hot path.
#[derive(Debug)]
pub(crate) struct Scratch {
    stamp: Vec<u32>,
    epoch: u32,
    pub(crate) members: Vec<u32>,
    frontier: Vec<u32>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            epoch: 0,
            members: Vec::new(),
            frontier: Vec::new(),
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Fills `self.members` with the exact `k`-neighborhood of `root`
    /// (unordered). Returns `None` if the component is smaller than `k`.
    pub(crate) fn exact(&mut self, g: &Graph, root: u32, k: usize) -> Option<VisitCost> {
        let epoch = self.next_epoch();
        self.members.clear();
        self.members.push(root);
        self.stamp[root as usize] = epoch;
        let mut cost = VisitCost {
            visited: 1,
            edge_checks: 0,
        };
        let mut layer_start = 0;
        while self.members.len() < k {
            self.frontier.clear();
            for i in layer_start..self.members.len() {
                let adj = g.neighbors_raw(self.members[i]);
                cost.edge_checks += adj.len();
                for &w in adj {
                    let s = &mut self.stamp[w as usize];
                    if *s != epoch {
                        *s = epoch;
                        self.frontier.push(w);
                    }
                }
            }
            if self.frontier.is_empty() {
                return None;
            }
            cost.visited += self.frontier.len();
            let need = k - self.members.len();
            layer_start = self.members.len();
            if self.frontier.len() > need {
                self.frontier.select_nth_unstable(need - 1);
                self.members.extend_from_slice(&self.frontier[..need]);
            } else {
                self.members.extend_from_slice(&self.frontier);
            }
        }
        Some(cost)
    }
}

/// One exact `k`-neighborhood per vertex whose component has at least `k`
/// vertices. Neighborhoods are rebuilt on demand rather than stored: the
/// family of a 10^6-vertex graph at `k = 1000` would otherwise hold 10^9 ids.
#[derive(Debug, Clone)]
pub struct NeighborhoodFamily {
    graph: Arc<Graph>,
    k: usize,
    admissible: Vec<bool>,
    skipped: Vec<VertexId>,
}

pub fn build_family(g: &AttributedGraph, k: usize) -> Result<NeighborhoodFamily> {
    if k == 0 || k > g.n() {
        return Err(ScanError::InvalidK { k, n: g.n() });
    }
    let sizes = g.component_sizes();
    let admissible: Vec<bool> = sizes.iter().map(|&s| s >= k).collect();
    let skipped: Vec<VertexId> = admissible
        .iter()
        .enumerate()
        .filter(|(_, &ok)| !ok)
        .map(|(i, _)| VertexId::from(i))
        .collect();
    if skipped.len() == g.n() {
        return Err(ScanError::NoAdmissibleNeighborhood { k });
    }
    Ok(NeighborhoodFamily {
        graph: g.shared_graph(),
        k,
        admissible,
        skipped,
    })
}

impl NeighborhoodFamily {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// Number of neighborhoods (non-skipped roots).
    pub fn len(&self) -> usize {
        self.admissible.len() - self.skipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn skipped(&self) -> &[VertexId] {
        &self.skipped
    }

    pub fn is_admissible(&self, v: VertexId) -> bool {
        self.admissible.get(v.index()).copied().unwrap_or(false)
    }

    pub fn roots(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.admissible
            .iter()
            .enumerate()
            .filter(|(_, &ok)| ok)
            .map(|(i, _)| VertexId::from(i))
    }

    /// The family member rooted at `v`, or `None` if `v` is skipped.
    pub fn neighborhood(&self, v: VertexId) -> Option<ExactNeighborhood> {
        if !self.is_admissible(v) {
            return None;
        }
        let layers = bfs_layers(&self.graph, v, self.k).ok()?;
        exact_neighborhood(&layers, self.k).ok()
    }

    /// Applies `f` to every admissible root's member list (unordered) and
    /// visit cost, in parallel. Slot `i` holds the result for vertex `i`.
    pub fn map_roots<T, F>(&self, workers: usize, f: F) -> Result<Vec<Option<T>>>
    where
        T: Send,
        F: Fn(VertexId, &[u32], VisitCost) -> T + Sync + Send,
    {
        let g = &*self.graph;
        let k = self.k;
        let admissible = &self.admissible;
        with_workers(workers, || {
            (0..g.n() as u32)
                .into_par_iter()
                .map_init(
                    || Scratch::new(g.n()),
                    |scratch, v| {
                        if !admissible[v as usize] {
                            return None;
                        }
                        let cost = scratch
                            .exact(g, v, k)
                            .expect("admissible root has a large enough component");
                        Some(f(VertexId(v), &scratch.members, cost))
                    },
                )
                .collect()
        })
    }

    /// Every neighborhood, ascending members; `None` for skipped roots.
    pub fn materialize(&self, workers: usize) -> Result<Vec<Option<ExactNeighborhood>>> {
        let k = self.k;
        let g = &*self.graph;
        self.map_roots(workers, |root, members, _| {
            let mut members: Vec<VertexId> = members.iter().map(|&u| VertexId(u)).collect();
            members.sort_unstable();
            // recover r and the last-layer part from hop distances
            let layers = bfs_layers(g, root, k).expect("k >= 1");
            let r = layers.radius();
            let last: Vec<VertexId> = members
                .iter()
                .copied()
                .filter(|m| layers.layers[r].binary_search(m).is_ok())
                .collect();
            ExactNeighborhood {
                root,
                members,
                inner_radius: r,
                truncated_last_layer: last,
            }
        })
    }

    /// Writes `root,member` rows (external labels) for every neighborhood.
    pub fn write_csv(&self, path: &Path, workers: usize) -> Result<()> {
        let all = self.materialize(workers)?;
        let file = std::fs::File::create(path).map_err(|e| ScanError::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(["root", "member"])?;
        let labels = self.graph.labels();
        for nb in all.iter().flatten() {
            let root = labels.label(nb.root);
            for &m in &nb.members {
                w.write_record([root.as_ref(), labels.label(m).as_ref()])?;
            }
        }
        w.flush().map_err(|e| ScanError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DuplicatePolicy, LabelMap};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn graph(n: usize, edges: &[(u32, u32)]) -> AttributedGraph {
        let (g, _) = Graph::from_edges(
            n,
            edges.iter().copied(),
            LabelMap::Identity(n),
            DuplicatePolicy::Merge,
        )
        .unwrap();
        AttributedGraph::new(g)
    }

    fn ids(v: &[VertexId]) -> Vec<u32> {
        v.iter().map(|x| x.0).collect()
    }

    fn star() -> AttributedGraph {
        graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)])
    }

    #[test]
    fn path_layers() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let l = bfs_layers(&g, VertexId(0), 2).unwrap();
        assert_eq!(l.layers.len(), 2);
        assert_eq!(ids(&l.layers[0]), vec![0]);
        assert_eq!(ids(&l.layers[1]), vec![1]);
        assert_eq!(ids(&l.ball(1)), vec![0, 1]);
        assert!(!l.exhausted);
    }

    #[test]
    fn star_full_neighborhood_overshoots() {
        let l = bfs_layers(&star(), VertexId(0), 4).unwrap();
        assert_eq!(l.cumulative_sizes, vec![1, 6]);
        assert_eq!(l.ball(1).len(), 6);
        let e = exact_neighborhood(&l, 4).unwrap();
        assert_eq!(ids(&e.members), vec![0, 1, 2, 3]);
        assert_eq!(ids(&e.truncated_last_layer), vec![1, 2, 3]);
        assert_eq!(e.inner_radius, 1);
    }

    #[test]
    fn exact_equals_ball_at_boundary() {
        let l = bfs_layers(&star(), VertexId(0), 6).unwrap();
        let e = exact_neighborhood(&l, 6).unwrap();
        assert_eq!(e.members, l.ball(1));
    }

    #[test]
    fn isolated_vertex_is_exhausted() {
        let g = graph(3, &[(0, 1)]);
        let l = bfs_layers(&g, VertexId(2), 2).unwrap();
        assert!(l.exhausted);
        assert_eq!(l.reached(), 1);
        assert!(matches!(
            exact_neighborhood(&l, 2),
            Err(ScanError::InsufficientComponent { root: 2, reachable: 1, m: 2 })
        ));
        let fam = build_family(&g, 2).unwrap();
        assert_eq!(ids(fam.skipped()), vec![2]);
        assert!(fam.neighborhood(VertexId(2)).is_none());
    }

    #[test]
    fn complete_graph_family() {
        let mut edges = Vec::new();
        for u in 0..5 {
            for v in u + 1..5 {
                edges.push((u, v));
            }
        }
        let g = graph(5, &edges);
        let fam = build_family(&g, 3).unwrap();
        assert_eq!(fam.len(), 5);
        let all = fam.materialize(1).unwrap();
        for (v, nb) in all.iter().enumerate() {
            let nb = nb.as_ref().unwrap();
            let mut expect: Vec<u32> = std::iter::once(v as u32)
                .chain((0..5).filter(|&u| u != v as u32).take(2))
                .collect();
            expect.sort();
            assert_eq!(ids(&nb.members), expect);
        }
    }

    #[test]
    fn two_triangles_have_no_admissible_root() {
        let g = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        assert!(matches!(
            build_family(&g, 4),
            Err(ScanError::NoAdmissibleNeighborhood { k: 4 })
        ));
    }

    #[test]
    fn k_out_of_range() {
        let g = graph(3, &[(0, 1)]);
        assert!(matches!(build_family(&g, 4), Err(ScanError::InvalidK { k: 4, n: 3 })));
        assert!(matches!(build_family(&g, 0), Err(ScanError::InvalidK { .. })));
        assert!(bfs_layers(&g, VertexId(0), 0).is_err());
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> AttributedGraph {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        graph(n, &edges)
    }

    /// Walk sets: `N_0 = {v}`, `N_i` = neighbors of `N_{i-1}`.
    fn walk_sets(g: &Graph, v: VertexId, upto: usize) -> Vec<BTreeSet<VertexId>> {
        let mut out = vec![BTreeSet::from([v])];
        for i in 1..=upto {
            let next: BTreeSet<VertexId> = out[i - 1].iter().flat_map(|&u| g.neighbors(u)).collect();
            out.push(next);
        }
        out
    }

    #[test]
    fn ten_vertex_containments_against_walk_oracle() {
        for seed in 0..20 {
            let g = random_graph(10, 0.3, seed);
            let Ok(fam) = build_family(&g, 4) else { continue };
            for v in fam.roots() {
                let nb = fam.neighborhood(v).unwrap();
                let n_sets = walk_sets(&g, v, g.n());
                let ball = |r: usize| -> BTreeSet<VertexId> {
                    n_sets[..=r].iter().flatten().copied().collect()
                };
                let r = (0..=g.n()).find(|&r| ball(r).len() >= 4).unwrap();
                let members: BTreeSet<VertexId> = nb.members.iter().copied().collect();
                assert_eq!(members.len(), 4);
                assert_eq!(nb.inner_radius, r);
                if r > 0 {
                    assert!(ball(r - 1).is_subset(&members));
                }
                assert!(members.is_subset(&ball(r)));
            }
        }
    }

    proptest! {
        #[test]
        fn fast_path_matches_layered_definition(seed in any::<u64>(), n in 2usize..30, k in 1usize..8) {
            let g = random_graph(n, 0.15, seed);
            let k = k.min(n);
            let mut scratch = Scratch::new(n);
            for v in g.vertices() {
                let layers = bfs_layers(&g, v, k).unwrap();
                match (scratch.exact(&g, v.0, k), exact_neighborhood(&layers, k)) {
                    (Some(cost), Ok(nb)) => {
                        let mut fast = scratch.members.clone();
                        fast.sort_unstable();
                        prop_assert_eq!(fast, ids(&nb.members));
                        prop_assert_eq!(cost.visited, layers.reached());
                    }
                    (None, Err(_)) => {}
                    (a, b) => prop_assert!(false, "disagree: {:?} vs {:?}", a, b),
                }
            }
        }

        #[test]
        fn layers_are_monotone_and_disjoint(seed in any::<u64>(), n in 2usize..30) {
            let g = random_graph(n, 0.12, seed);
            let l = bfs_layers(&g, VertexId(0), n).unwrap();
            prop_assert!(l.cumulative_sizes.windows(2).all(|w| w[0] < w[1]));
            let all: Vec<VertexId> = l.layers.iter().flatten().copied().collect();
            let set: BTreeSet<VertexId> = all.iter().copied().collect();
            prop_assert_eq!(all.len(), set.len());
        }

        #[test]
        fn family_rebuild_is_deterministic(seed in any::<u64>(), n in 4usize..25) {
            let g = random_graph(n, 0.2, seed);
            if let Ok(fam) = build_family(&g, 3) {
                let a = fam.materialize(1).unwrap();
                let b = build_family(&g, 3).unwrap().materialize(3).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn family_csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fam.csv");
        let fam = build_family(&star(), 2).unwrap();
        fam.write_csv(&path, 1).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("root,member\n0,0\n0,1\n1,0\n1,1\n"));
        assert_eq!(text.lines().count(), 1 + 6 * 2);
    }
}

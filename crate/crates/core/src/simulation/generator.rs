use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::graph::{AttributedGraph, DuplicatePolicy, Graph, GroundTruth, LabelMap};
use crate::rng::{Purpose, StreamFactory};

/// Two random `out_degree`-out subgraphs joined by a few bridges.
///
/// Vertices `[0, n_big)` form the big subgraph, whose vertices are active
/// with probability `active_probability`; vertices `[n_big, n_big + n_small)`
/// form the small, all-inactive subgraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoSubgraphSpec {
    pub n_big: usize,
    pub n_small: usize,
    pub out_degree: usize,
    pub bridges: usize,
    pub seed: u64,
    pub inactive_level: f64,
    pub active_level: f64,
    pub active_probability: f64,
}

impl Default for TwoSubgraphSpec {
    fn default() -> Self {
        Self {
            n_big: 1_000_000,
            n_small: 1_000,
            out_degree: 3,
            bridges: 20,
            seed: 0,
            inactive_level: 2.0,
            active_level: 10.0,
            active_probability: 0.5,
        }
    }
}

impl TwoSubgraphSpec {
    /// The reduced replica used by the test suite: 10^5 + 10^3 vertices.
    pub fn reduced(seed: u64) -> Self {
        Self {
            n_big: 100_000,
            seed,
            ..Self::default()
        }
    }

    pub fn n(&self) -> usize {
        self.n_big + self.n_small
    }

    /// Upper bound on the number of undirected edges.
    pub fn max_edges(&self) -> usize {
        self.out_degree * self.n() + self.bridges
    }

    fn validate(&self) -> Result<()> {
        if self.n_big == 0 || self.n_small == 0 {
            return Err(ScanError::invalid("both subgraphs need at least one vertex"));
        }
        if self.out_degree >= self.n_big.min(self.n_small) {
            return Err(ScanError::invalid(format!(
                "out_degree {} must be below both subgraph sizes",
                self.out_degree
            )));
        }
        if !(0.0..=1.0).contains(&self.active_probability) {
            return Err(ScanError::invalid("active_probability must lie in [0, 1]"));
        }
        if !(self.active_level > self.inactive_level) {
            return Err(ScanError::invalid("active level must exceed the inactive level"));
        }
        if self.n() >= 1 << 32 {
            return Err(ScanError::invalid("graph too large"));
        }
        Ok(())
    }
}

pub fn generate_two_subgraph(spec: &TwoSubgraphSpec) -> Result<(AttributedGraph, GroundTruth)> {
    spec.validate()?;
    let streams = StreamFactory::new(spec.seed);
    let n = spec.n();
    let d = spec.out_degree;

    // Out-targets for every vertex, drawn distinct within its own subgraph.
    let mut targets = vec![0u32; n * d];
    if d > 0 {
        targets
            .par_chunks_mut(d)
            .enumerate()
            .for_each(|(v, out)| {
                let (offset, size) = if v < spec.n_big {
                    (0, spec.n_big)
                } else {
                    (spec.n_big, spec.n_small)
                };
                let local = v - offset;
                let mut rng = streams.stream(Purpose::Topology, v as u64);
                let mut filled = 0;
                while filled < d {
                    let t = rng.random_range(0..size);
                    if t == local || out[..filled].contains(&((offset + t) as u32)) {
                        continue;
                    }
                    out[filled] = (offset + t) as u32;
                    filled += 1;
                }
            });
    }
    let mut bridge_rng = streams.stream(Purpose::Bridges, 0);
    let bridges: Vec<(u32, u32)> = (0..spec.bridges)
        .map(|_| {
            let u = bridge_rng.random_range(0..spec.n_big);
            let w = spec.n_big + bridge_rng.random_range(0..spec.n_small);
            (u as u32, w as u32)
        })
        .collect();
    let edges = targets
        .chunks(d.max(1))
        .enumerate()
        .flat_map(|(v, out)| out.iter().map(move |&t| (v as u32, t)))
        .chain(bridges);
    let (graph, _) = Graph::from_edges(n, edges, LabelMap::Identity(n), DuplicatePolicy::Merge)?;

    let active: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|v| {
            v < spec.n_big
                && streams
                    .stream(Purpose::Activity, v as u64)
                    .random_bool(spec.active_probability)
        })
        .collect();
    let truth = GroundTruth::two_level(spec.inactive_level, spec.active_level, active)?;
    Ok((AttributedGraph::new(graph), truth))
}

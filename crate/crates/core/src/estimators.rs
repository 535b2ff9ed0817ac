//! k-NN scan estimators.
//!
//! Phase 1 computes, independently per root, the average of `X_v` over the
//! root's exact `k`-neighborhood. Phase 2 reduces those averages with `min`
//! (sublevel, estimating `a`) or `max` (superlevel, estimating `b`), breaking
//! ties towards the smallest root id. The selected neighborhood also feeds
//! the noise estimators: its empirical CDF and its sample variance around
//! the estimate.
//!
//! Per-root work is `k` accumulations plus the adjacency entries of
//! `Ω_{r-1}(v)`, which has fewer than `k` vertices; with maximum degree `d`
//! that is at most `(1 + d)·k` operations per root.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::graph::{AttributedGraph, VertexId};
use crate::neighborhoods::{ExactNeighborhood, NeighborhoodFamily, VisitCost};
use crate::numeric::{ExactSum, LongAccumulator};
use crate::parallel::{default_workers, with_workers};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    Sublevel,
    Superlevel,
}

impl ScanMode {
    /// True if `x` is strictly preferred over `y`.
    #[inline]
    fn better(self, x: f64, y: f64) -> bool {
        match self {
            ScanMode::Sublevel => x < y,
            ScanMode::Superlevel => x > y,
        }
    }
}

impl std::str::FromStr for ScanMode {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sub" | "sublevel" => Ok(ScanMode::Sublevel),
            "super" | "superlevel" => Ok(ScanMode::Superlevel),
            other => Err(ScanError::invalid(format!("unknown scan mode `{other}`"))),
        }
    }
}

/// `S_K`: exact sum of observations over the members of `nb`.
pub fn neighborhood_sum(g: &AttributedGraph, nb: &ExactNeighborhood) -> Result<f64> {
    let x = g.observations()?;
    let mut acc = ExactSum::new();
    for m in &nb.members {
        let v = x
            .get(m.index())
            .ok_or_else(|| ScanError::invalid(format!("member {m} out of range")))?;
        acc.add(*v);
    }
    Ok(acc.value())
}

fn neighborhood_mean(x: &[f64], members: impl Iterator<Item = usize>, k: usize) -> f64 {
    let mut acc = LongAccumulator::new();
    for i in members {
        acc.add(x[i]);
    }
    acc.mean(k)
}

/// Output of the decentralized phase.
#[derive(Debug, Clone)]
pub struct Phase1 {
    pub k: usize,
    /// Neighborhood average per root; `None` for skipped roots.
    pub averages: Vec<Option<f64>>,
    pub cost: Vec<Option<VisitCost>>,
}

impl Phase1 {
    /// Total member accumulations (`k` per admissible root).
    pub fn accumulations(&self) -> usize {
        self.averages.iter().flatten().count() * self.k
    }

    pub fn max_visited(&self) -> usize {
        self.cost.iter().flatten().map(|c| c.visited).max().unwrap_or(0)
    }

    pub fn write_csv(&self, g: &AttributedGraph, path: &Path) -> Result<()> {
        write_averages(&self.averages, g, path)
    }
}

/// `root,average` for every admissible root.
fn write_averages(averages: &[Option<f64>], g: &AttributedGraph, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| ScanError::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["root", "average"])?;
    for (i, avg) in averages.iter().enumerate() {
        if let Some(avg) = avg {
            w.write_record([g.labels().label(VertexId::from(i)).as_ref(), &avg.to_string()])?;
        }
    }
    w.flush().map_err(|e| ScanError::io(path, e))
}

fn check_family(g: &AttributedGraph, family: &NeighborhoodFamily) -> Result<()> {
    let same = std::ptr::eq(g.graph(), family.graph())
        || (g.n() == family.graph().n() && g.edge_count() == family.graph().edge_count());
    if same {
        Ok(())
    } else {
        Err(ScanError::invalid("family was built on a different graph"))
    }
}

/// Phase 1: per-root neighborhood averages. Output is identical for any
/// `workers >= 1`.
pub fn scan_phase1(g: &AttributedGraph, family: &NeighborhoodFamily, workers: usize) -> Result<Phase1> {
    check_family(g, family)?;
    let x = g.observations()?;
    let k = family.k();
    let per_root = family.map_roots(workers, |_, members, cost| {
        (neighborhood_mean(x, members.iter().map(|&u| u as usize), k), cost)
    })?;
    let (averages, cost) = per_root
        .into_iter()
        .map(|r| match r {
            Some((a, c)) => (Some(a), Some(c)),
            None => (None, None),
        })
        .unzip();
    Ok(Phase1 { k, averages, cost })
}

/// Winner of the phase-2 reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub root: VertexId,
    pub value: f64,
}

impl Extremum {
    /// Associative, commutative merge: better value wins, equal values go to
    /// the smaller root id.
    pub fn combine(self, other: Extremum, mode: ScanMode) -> Extremum {
        if mode.better(other.value, self.value)
            || (other.value == self.value && other.root < self.root)
        {
            other
        } else {
            self
        }
    }
}

fn candidates(values: &[Option<f64>]) -> impl Iterator<Item = Extremum> + '_ {
    values.iter().enumerate().filter_map(|(i, v)| match v {
        Some(v) if v.is_finite() => Some(Extremum {
            root: VertexId::from(i),
            value: *v,
        }),
        _ => None,
    })
}

/// Phase 2: a single sequential reduction pass over per-root scores.
pub fn scan_phase2(values: &[Option<f64>], mode: ScanMode) -> Result<Extremum> {
    candidates(values)
        .reduce(|a, b| a.combine(b, mode))
        .ok_or(ScanError::EmptyFamily)
}

/// Phase 2 as a parallel tree reduction; same answer as [`scan_phase2`].
pub fn scan_phase2_tree(values: &[Option<f64>], mode: ScanMode, workers: usize) -> Result<Extremum> {
    with_workers(workers, || {
        values
            .par_iter()
            .enumerate()
            .filter_map(|(i, v)| match v {
                Some(v) if v.is_finite() => Some(Extremum {
                    root: VertexId::from(i),
                    value: *v,
                }),
                _ => None,
            })
            .reduce_with(|a, b| a.combine(b, mode))
    })?
    .ok_or(ScanError::EmptyFamily)
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub k: usize,
    pub mode: ScanMode,
    /// `K̂`
    pub selected: ExactNeighborhood,
    /// `â` (sublevel) or `b̂` (superlevel), recomputed from `K̂`'s members.
    pub estimate: f64,
    pub per_vertex_avg: Vec<Option<f64>>,
    /// All roots whose average equals the extremum, ascending.
    pub ties: Vec<VertexId>,
    pub skipped_count: usize,
    pub cost: Vec<Option<VisitCost>>,
}

impl ScanResult {
    pub fn root(&self) -> VertexId {
        self.selected.root
    }

    pub fn write_averages_csv(&self, g: &AttributedGraph, path: &Path) -> Result<()> {
        write_averages(&self.per_vertex_avg, g, path)
    }

    pub fn report(&self, g: &AttributedGraph) -> ScanReport {
        let labels = g.labels();
        ScanReport {
            k: self.k,
            mode: self.mode,
            root: labels.label(self.root()).into_owned(),
            estimate: self.estimate,
            ties: self.ties.iter().map(|&t| labels.label(t).into_owned()).collect(),
            skipped_count: self.skipped_count,
        }
    }
}

/// JSON form of a scan: `{k, mode, root, estimate, ties, skipped_count}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub k: usize,
    pub mode: ScanMode,
    pub root: String,
    pub estimate: f64,
    pub ties: Vec<String>,
    pub skipped_count: usize,
}

/// Both phases plus the final recomputation of the estimate from `K̂`.
pub fn scan(
    g: &AttributedGraph,
    family: &NeighborhoodFamily,
    mode: ScanMode,
    workers: usize,
) -> Result<ScanResult> {
    let phase1 = scan_phase1(g, family, workers)?;
    let best = scan_phase2(&phase1.averages, mode)?;
    let ties = candidates(&phase1.averages)
        .filter(|c| c.value == best.value)
        .map(|c| c.root)
        .collect();
    let selected = family
        .neighborhood(best.root)
        .expect("phase 2 only returns admissible roots");
    let x = g.observations()?;
    let estimate = neighborhood_mean(x, selected.members.iter().map(|m| m.index()), family.k());
    debug_assert_eq!(estimate, best.value);
    Ok(ScanResult {
        k: family.k(),
        mode,
        selected,
        estimate,
        per_vertex_avg: phase1.averages,
        ties,
        skipped_count: family.skipped().len(),
        cost: phase1.cost,
    })
}

/// Sublevel scan: `K̂ = argmin S_K`, `â = S_K̂ / k`.
pub fn scan_sublevel(g: &AttributedGraph, family: &NeighborhoodFamily) -> Result<ScanResult> {
    scan(g, family, ScanMode::Sublevel, default_workers())
}

/// Superlevel scan: `K̂ = argmax S_K`, `b̂ = S_K̂ / k`.
pub fn scan_superlevel(g: &AttributedGraph, family: &NeighborhoodFamily) -> Result<ScanResult> {
    scan(g, family, ScanMode::Superlevel, default_workers())
}

/// Right-continuous empirical distribution function over a sorted sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ecdf {
    samples: Arc<[f64]>,
}

impl Ecdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(ScanError::invalid("empirical CDF of an empty sample"));
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(ScanError::NonFinite { index });
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self {
            samples: samples.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `F̂(t) = #{x <= t} / n`.
    pub fn eval(&self, t: f64) -> f64 {
        self.samples.partition_point(|&x| x <= t) as f64 / self.len() as f64
    }

    /// `(t, F̂(t))` at each distinct sample point.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &x) in self.samples.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = f,
                _ => out.push((x, f)),
            }
        }
        out
    }

    /// Kolmogorov distance `sup_t |F̂(t) - cdf(t)|` to a continuous CDF.
    pub fn sup_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.len() as f64;
        let mut d: f64 = 0.0;
        let mut i = 0;
        while i < self.samples.len() {
            let x = self.samples[i];
            let mut j = i;
            while j < self.samples.len() && self.samples[j] == x {
                j += 1;
            }
            let f = cdf(x);
            d = d.max((j as f64 / n - f).abs()).max((f - i as f64 / n).abs());
            i = j;
        }
        d
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| ScanError::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        w.write_record(["t", "F"])?;
        for (t, f) in self.steps() {
            w.write_record([t.to_string(), f.to_string()])?;
        }
        w.flush().map_err(|e| ScanError::io(path, e))
    }
}

/// Noise-distribution and noise-variance estimates from the selected
/// neighborhood.
#[derive(Debug, Clone, PartialEq)]
pub struct CrawlerEstimate {
    pub sigma2_hat: f64,
    pub ecdf: Ecdf,
}

pub fn crawler_estimates(g: &AttributedGraph, scan: &ScanResult) -> Result<CrawlerEstimate> {
    if scan.mode != ScanMode::Sublevel {
        return Err(ScanError::invalid("crawler estimates need a sublevel scan"));
    }
    let size = scan.selected.len();
    if size < 2 {
        return Err(ScanError::TooFewObservations(size));
    }
    let x = g.observations()?;
    let values: Vec<f64> = scan.selected.members.iter().map(|m| x[m.index()]).collect();
    let ss: ExactSum = values
        .iter()
        .map(|&v| (v - scan.estimate) * (v - scan.estimate))
        .collect();
    Ok(CrawlerEstimate {
        sigma2_hat: ss.value() / (size - 1) as f64,
        ecdf: Ecdf::new(values)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DuplicatePolicy, Graph, LabelMap};
    use crate::neighborhoods::build_family;

    fn attributed(n: usize, edges: &[(u32, u32)], x: Vec<f64>) -> AttributedGraph {
        let (g, _) = Graph::from_edges(
            n,
            edges.iter().copied(),
            LabelMap::Identity(n),
            DuplicatePolicy::Merge,
        )
        .unwrap();
        AttributedGraph::new(g).set_observations(x).unwrap()
    }

    fn two_triangles(x: Vec<f64>) -> AttributedGraph {
        attributed(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)], x)
    }

    #[test]
    fn neighborhood_sum_examples() {
        let g = attributed(4, &[(0, 1), (1, 2), (2, 3)], vec![1.0, 2.0, 3.0, 4.0]);
        let fam = build_family(&g, 3).unwrap();
        let nb = fam.neighborhood(VertexId(1)).unwrap();
        assert_eq!(neighborhood_sum(&g, &nb).unwrap(), 6.0);
        let single = build_family(&g, 1).unwrap().neighborhood(VertexId(3)).unwrap();
        assert_eq!(neighborhood_sum(&g, &single).unwrap(), 4.0);
        let bare = AttributedGraph::new(g.graph().clone());
        assert!(matches!(neighborhood_sum(&bare, &nb), Err(ScanError::ObservationsUnset)));
    }

    #[test]
    fn separated_levels() {
        let g = two_triangles(vec![0.0, 0.0, 0.0, 9.0, 9.0, 9.0]);
        let fam = build_family(&g, 3).unwrap();
        let lo = scan(&g, &fam, ScanMode::Sublevel, 1).unwrap();
        assert_eq!(lo.estimate, 0.0);
        assert_eq!(lo.root(), VertexId(0));
        assert_eq!(lo.selected.members, vec![VertexId(0), VertexId(1), VertexId(2)]);
        let hi = scan(&g, &fam, ScanMode::Superlevel, 1).unwrap();
        assert_eq!(hi.estimate, 9.0);
        assert_eq!(hi.selected.members, vec![VertexId(3), VertexId(4), VertexId(5)]);
    }

    #[test]
    fn constant_observations_tie_everywhere() {
        let g = two_triangles(vec![1.5; 6]);
        let fam = build_family(&g, 2).unwrap();
        let r = scan(&g, &fam, ScanMode::Sublevel, 2).unwrap();
        assert_eq!(r.estimate, 1.5);
        assert_eq!(r.ties.len(), 6);
        assert_eq!(r.root(), VertexId(0));
        let report = r.report(&g);
        assert_eq!(report.root, "0");
        assert_eq!(report.ties.len(), 6);
        let json = serde_json::to_value(&report).unwrap();
        assert_eq!(json["mode"], "sublevel");
    }

    #[test]
    fn phase2_examples() {
        let e = scan_phase2(&[Some(3.0), Some(1.0), Some(2.0)], ScanMode::Sublevel).unwrap();
        assert_eq!((e.root, e.value), (VertexId(1), 1.0));
        let e = scan_phase2(&[Some(1.0), Some(1.0)], ScanMode::Sublevel).unwrap();
        assert_eq!(e.root, VertexId(0));
        let e = scan_phase2(&[None, Some(1.0), Some(4.0), Some(4.0)], ScanMode::Superlevel).unwrap();
        assert_eq!(e.root, VertexId(2));
        assert!(matches!(scan_phase2(&[None, None], ScanMode::Sublevel), Err(ScanError::EmptyFamily)));
    }

    #[test]
    fn tree_reduction_matches_sequential() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            // coarse grid forces plenty of ties
            let v: Vec<Option<f64>> = (0..500)
                .map(|_| (rng.random::<f64>() > 0.1).then(|| rng.random_range(0..20) as f64))
                .collect();
            for mode in [ScanMode::Sublevel, ScanMode::Superlevel] {
                assert_eq!(
                    scan_phase2(&v, mode).unwrap(),
                    scan_phase2_tree(&v, mode, 4).unwrap()
                );
            }
        }
    }

    #[test]
    fn complete_graph_accounting() {
        let n = 7;
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                edges.push((u, v));
            }
        }
        let g = attributed(n, &edges, (0..n).map(|i| i as f64).collect());
        let fam = build_family(&g, n).unwrap();
        let p = scan_phase1(&g, &fam, 2).unwrap();
        assert_eq!(p.accumulations(), n * n);
        assert!(p.cost.iter().flatten().all(|c| c.visited == n));
    }

    #[test]
    fn crawler_hand_example() {
        let g = attributed(3, &[(0, 1), (1, 2)], vec![1.0, 2.0, 3.0]);
        let fam = build_family(&g, 3).unwrap();
        let r = scan(&g, &fam, ScanMode::Sublevel, 1).unwrap();
        assert_eq!(r.estimate, 2.0);
        let c = crawler_estimates(&g, &r).unwrap();
        assert_eq!(c.sigma2_hat, 1.0);
        assert!((c.ecdf.eval(1.5) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.ecdf.eval(0.0), 0.0);
        assert_eq!(c.ecdf.eval(3.0), 1.0);
    }

    #[test]
    fn crawler_constant_observations() {
        let g = attributed(3, &[(0, 1), (1, 2)], vec![4.0; 3]);
        let fam = build_family(&g, 3).unwrap();
        let r = scan(&g, &fam, ScanMode::Sublevel, 1).unwrap();
        let c = crawler_estimates(&g, &r).unwrap();
        assert_eq!(c.sigma2_hat, 0.0);
        assert_eq!(c.ecdf.steps(), vec![(4.0, 1.0)]);
    }

    #[test]
    fn crawler_errors() {
        let g = attributed(3, &[(0, 1), (1, 2)], vec![1.0, 2.0, 3.0]);
        let r1 = scan(&g, &build_family(&g, 1).unwrap(), ScanMode::Sublevel, 1).unwrap();
        assert!(matches!(crawler_estimates(&g, &r1), Err(ScanError::TooFewObservations(1))));
        let sup = scan(&g, &build_family(&g, 2).unwrap(), ScanMode::Superlevel, 1).unwrap();
        assert!(crawler_estimates(&g, &sup).is_err());
    }

    #[test]
    fn ecdf_sup_distance() {
        let e = Ecdf::new(vec![0.5]).unwrap();
        // uniform(0,1): |1 - 0.5| at the jump
        assert_eq!(e.sup_distance(|t| t.clamp(0.0, 1.0)), 0.5);
        let e = Ecdf::new(vec![0.25, 0.75]).unwrap();
        assert_eq!(e.sup_distance(|t| t.clamp(0.0, 1.0)), 0.25);
    }

    #[test]
    fn foreign_family_rejected() {
        let g = attributed(3, &[(0, 1), (1, 2)], vec![1.0, 2.0, 3.0]);
        let h = attributed(4, &[(0, 1), (1, 2), (2, 3)], vec![1.0; 4]);
        let fam = build_family(&h, 2).unwrap();
        assert!(scan(&g, &fam, ScanMode::Sublevel, 1).is_err());
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::estimators::{scan, ScanMode};
use crate::graph::{AttributedGraph, GroundTruth, VertexId};
use crate::io;
use crate::neighborhoods::{build_family, NeighborhoodFamily};
use crate::numeric::mean_and_variance;
use crate::parallel::default_workers;

use super::adversary::{AdversaryKind, AdversaryStrategy, World};
use super::game::play_multistep_game;
use super::generator::{generate_two_subgraph, TwoSubgraphSpec};
use super::noise::{NoiseKind, NoiseModel};

/// Where the graph and its ground truth come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum GraphSource {
    TwoSubgraph(TwoSubgraphSpec),
    /// Edge list plus a `vertex,activity,active` truth file.
    EdgeList { path: PathBuf, truth: PathBuf },
    /// GML graph; nodes whose `value` equals `active_value` are active.
    Gml {
        path: PathBuf,
        #[serde(default = "one")]
        active_value: i64,
        #[serde(default = "two")]
        inactive_level: f64,
        #[serde(default = "ten")]
        active_level: f64,
    },
}

fn one() -> i64 {
    1
}
fn two() -> f64 {
    2.0
}
fn ten() -> f64 {
    10.0
}
fn yes() -> bool {
    true
}
fn twenty() -> usize {
    20
}

/// Monte Carlo experiment description, read from JSON.
///
/// ```json
/// {
///   "graph": {"source": "two_subgraph", "n_big": 100000, "n_small": 1000},
///   "noise": {"kind": "gaussian", "sigma": 1.0},
///   "ks": [500, 1000],
///   "seeds": [0, 1, 2],
///   "adversary": {"kind": "multi_step", "max_steps": 10}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub noise: NoiseKind,
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub adversary: AdversaryStrategy,
    /// Draw a fresh random graph for every seed; otherwise the generator's
    /// own seed is kept and only the noise changes.
    #[serde(default = "yes")]
    pub redraw_graph: bool,
    #[serde(default = "sublevel")]
    pub mode: ScanMode,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default = "twenty")]
    pub histogram_bins: usize,
}

fn sublevel() -> ScanMode {
    ScanMode::Sublevel
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ScanError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(ScanError::invalid("ks must be a non-empty list of positive sizes"));
        }
        if self.seeds.is_empty() {
            return Err(ScanError::invalid("seeds must not be empty"));
        }
        if self.mode == ScanMode::Superlevel && self.adversary.kind != AdversaryKind::None {
            return Err(ScanError::invalid("adversaries only apply to the sublevel scan"));
        }
        if self.histogram_bins == 0 {
            return Err(ScanError::invalid("histogram_bins must be positive"));
        }
        Ok(())
    }

    fn workers(&self) -> usize {
        self.workers.unwrap_or_else(default_workers)
    }
}

/// Graph and truth for one seed.
pub fn instantiate(source: &GraphSource, seed: u64, redraw: bool) -> Result<(AttributedGraph, GroundTruth)> {
    match source {
        GraphSource::TwoSubgraph(spec) => {
            let mut spec = spec.clone();
            if redraw {
                spec.seed = seed;
            }
            generate_two_subgraph(&spec)
        }
        GraphSource::EdgeList { path, truth } => {
            let (g, _) = io::load_edge_list(path, Default::default())?;
            let t = io::load_truth(&g, truth, None)?;
            Ok((g, t))
        }
        GraphSource::Gml {
            path,
            active_value,
            inactive_level,
            active_level,
        } => {
            let gml = io::load_gml(path)?;
            let active = gml.values.iter().map(|v| *v == Some(*active_value)).collect();
            let t = GroundTruth::two_level(*inactive_level, *active_level, active)?;
            Ok((gml.graph, t))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub k: usize,
    /// Root of the first scan's `K̂`.
    pub root: VertexId,
    pub initial_estimate: f64,
    /// Estimate after the adversary is done; equals the initial one without adversary.
    pub estimate: f64,
    pub initial_active: usize,
    pub winning_step: Option<usize>,
    pub won: bool,
    pub steps: usize,
}

/// Runs every `k` on one instance. The noise realization depends on `seed` only.
pub fn run_instance(
    g: &AttributedGraph,
    truth: &GroundTruth,
    families: &[NeighborhoodFamily],
    noise: &NoiseKind,
    seed: u64,
    mode: ScanMode,
    strategy: &AdversaryStrategy,
    workers: usize,
) -> Result<Vec<SeedRecord>> {
    let eps = NoiseModel::new(noise.clone(), seed).realize(g.n())?;
    let mut out = Vec::with_capacity(families.len());
    for family in families {
        let mut world = World::new(truth.clone(), eps.clone())?;
        let record = if mode == ScanMode::Superlevel {
            let r = scan(&world.attach(g)?, family, mode, workers)?;
            let active = r.selected.members.iter().filter(|&&v| truth.is_active(v)).count();
            SeedRecord {
                seed,
                k: family.k(),
                root: r.root(),
                initial_estimate: r.estimate,
                estimate: r.estimate,
                initial_active: active,
                winning_step: None,
                won: false,
                steps: 1,
            }
        } else {
            let game = play_multistep_game(g, family, &mut world, strategy, workers)?;
            SeedRecord {
                seed,
                k: family.k(),
                root: game.steps[0].root,
                initial_estimate: game.initial_estimate,
                estimate: game.final_estimate,
                initial_active: game.steps[0].active_in_selection,
                winning_step: game.winning_step,
                won: game.won,
                steps: game.steps.len(),
            }
        };
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() {
            return Self {
                edges: Vec::new(),
                counts: Vec::new(),
            };
        }
        if lo == hi {
            return Self {
                edges: vec![lo, hi],
                counts: vec![values.len()],
            };
        }
        let width = (hi - lo) / bins as f64;
        let mut edges: Vec<f64> = (0..bins).map(|i| lo + width * i as f64).collect();
        edges.push(hi);
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self { edges, counts }
    }
}

/// Counts of the winning step `N_w`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinCounts {
    pub at_0: usize,
    pub at_1: usize,
    pub at_2: usize,
    pub at_3: usize,
    pub at_4_or_more: usize,
    pub lost: usize,
}

impl WinCounts {
    pub fn record(&mut self, w: Option<usize>) {
        match w {
            Some(0) => self.at_0 += 1,
            Some(1) => self.at_1 += 1,
            Some(2) => self.at_2 += 1,
            Some(3) => self.at_3 += 1,
            Some(_) => self.at_4_or_more += 1,
            None => self.lost += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSummary {
    pub k: usize,
    pub runs: usize,
    pub mean: f64,
    /// Unbiased sample variance; zero for a single run.
    pub variance: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub mean_initial: f64,
    /// Runs whose first `K̂` held an active vertex.
    pub initially_contaminated: usize,
    pub wins: WinCounts,
    pub histogram: Histogram,
}

impl KSummary {
    pub fn from_records(k: usize, records: &[&SeedRecord], bins: usize) -> Self {
        let est: Vec<f64> = records.iter().map(|r| r.estimate).collect();
        let init: Vec<f64> = records.iter().map(|r| r.initial_estimate).collect();
        let (mean, variance) = match mean_and_variance(&est) {
            Some(mv) => mv,
            None => (est.first().copied().unwrap_or(f64::NAN), 0.0),
        };
        let mean_initial = mean_and_variance(&init)
            .map(|(m, _)| m)
            .unwrap_or_else(|| init.first().copied().unwrap_or(f64::NAN));
        let mut wins = WinCounts::default();
        for r in records {
            wins.record(r.winning_step);
        }
        KSummary {
            k,
            runs: records.len(),
            mean,
            variance,
            sd: variance.sqrt(),
            min: est.iter().copied().fold(f64::INFINITY, f64::min),
            max: est.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_initial,
            initially_contaminated: records.iter().filter(|r| r.initial_active > 0).count(),
            wins,
            histogram: Histogram::new(&est, bins),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub config: ExperimentConfig,
    pub records: Vec<SeedRecord>,
    pub per_k: Vec<KSummary>,
}

/// Runs the experiment. The result depends on the config and seed list only.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<MonteCarloSummary> {
    config.validate()?;
    let workers = config.workers();
    let mut records = Vec::new();
    let fixed = match (&config.graph, config.redraw_graph) {
        (GraphSource::TwoSubgraph(_), true) => None,
        _ => Some(instantiate(&config.graph, 0, false)?),
    };
    let fixed_families = match &fixed {
        Some((g, _)) => Some(families(g, &config.ks)?),
        None => None,
    };
    for &seed in &config.seeds {
        let drawn;
        let (g, truth, fams) = match (&fixed, &fixed_families) {
            (Some((g, t)), Some(f)) => (g, t, f),
            _ => {
                let (g, t) = instantiate(&config.graph, seed, true)?;
                let f = families(&g, &config.ks)?;
                drawn = (g, t, f);
                (&drawn.0, &drawn.1, &drawn.2)
            }
        };
        records.extend(run_instance(
            g,
            truth,
            fams,
            &config.noise,
            seed,
            config.mode,
            &config.adversary,
            workers,
        )?);
    }
    let mut by_k: BTreeMap<usize, Vec<&SeedRecord>> = BTreeMap::new();
    for r in &records {
        by_k.entry(r.k).or_default().push(r);
    }
    let per_k = config
        .ks
        .iter()
        .map(|k| KSummary::from_records(*k, &by_k[k], config.histogram_bins))
        .collect();
    Ok(MonteCarloSummary {
        config: config.clone(),
        records,
        per_k,
    })
}

fn families(g: &AttributedGraph, ks: &[usize]) -> Result<Vec<NeighborhoodFamily>> {
    ks.iter().map(|&k| build_family(g, k)).collect()
}

/// `seed,k,root,initial_estimate,estimate,initial_active,winning_step,won,steps`
pub fn write_records_csv(records: &[SeedRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "seed",
        "k",
        "root",
        "initial_estimate",
        "estimate",
        "initial_active",
        "winning_step",
        "won",
        "steps",
    ])?;
    for r in records {
        w.write_record([
            r.seed.to_string(),
            r.k.to_string(),
            r.root.to_string(),
            r.initial_estimate.to_string(),
            r.estimate.to_string(),
            r.initial_active.to_string(),
            r.winning_step.map(|s| s.to_string()).unwrap_or_default(),
            r.won.to_string(),
            r.steps.to_string(),
        ])?;
    }
    w.flush().map_err(|e| ScanError::io(path, e))
}

/// `k,bin_low,bin_high,count`
pub fn write_histogram_csv(per_k: &[KSummary], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["k", "bin_low", "bin_high", "count"])?;
    for s in per_k {
        for (i, c) in s.histogram.counts.iter().enumerate() {
            w.write_record([
                s.k.to_string(),
                s.histogram.edges[i].to_string(),
                s.histogram.edges[i + 1].to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| ScanError::io(path, e))
}

pub fn write_summary_json(summary: &MonteCarloSummary, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&(&summary.config, &summary.per_k))?;
    std::fs::write(path, text + "\n").map_err(|e| ScanError::io(path, e))
}

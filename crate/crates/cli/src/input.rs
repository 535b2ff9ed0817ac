use std::path::PathBuf;

use clap::Args;
use knnscan::io::{self, EdgeListOptions};
use knnscan::simulation::{apply_noise, GraphSource, NoiseKind, NoiseModel, TwoSubgraphSpec};
use knnscan::{AttributedGraph, GroundTruth, Result, ScanError};
use serde::Serialize;

/// Where the graph and its ground truth come from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SourceArgs {
    /// Edge list (two labels per line, `#` comments)
    #[arg(long, conflicts_with = "gml")]
    pub graph: Option<PathBuf>,
    /// GML graph; node `value` attributes give the active/inactive split
    #[arg(long)]
    pub gml: Option<PathBuf>,
    /// Ground truth as `vertex,activity,active` CSV
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// GML `value` marking active vertices
    #[arg(long, default_value_t = 1)]
    pub active_value: i64,
    #[command(flatten)]
    pub levels: LevelArgs,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
pub struct LevelArgs {
    /// Baseline activity of inactive vertices
    #[arg(long, default_value_t = 2.0)]
    pub inactive_level: f64,
    /// Activity of active vertices
    #[arg(long, default_value_t = 10.0)]
    pub active_level: f64,
}

/// Graph plus observations, read from file or simulated from the truth.
#[derive(Debug, Clone, Args, Serialize)]
pub struct InputArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Observations as `vertex,value` CSV
    #[arg(long)]
    pub attrs: Option<PathBuf>,
    /// Noise added to the truth when no --attrs are given: gaussian:SIGMA | uniform:M
    #[arg(long)]
    pub noise: Option<NoiseKind>,
    /// Seed of the simulated noise
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub struct Loaded {
    pub graph: AttributedGraph,
    pub truth: Option<GroundTruth>,
}

impl SourceArgs {
    pub fn load(&self) -> Result<Loaded> {
        match (&self.graph, &self.gml) {
            (Some(path), None) => {
                let (g, _) = io::load_edge_list(path, EdgeListOptions::default())?;
                let truth = match &self.truth {
                    Some(t) => Some(io::load_truth(&g, t, None)?),
                    None => None,
                };
                Ok(Loaded { graph: g, truth })
            }
            (None, Some(path)) => {
                let gml = io::load_gml(path)?;
                let truth = match &self.truth {
                    Some(t) => io::load_truth(&gml.graph, t, None)?,
                    None => {
                        let active = gml.values.iter().map(|v| *v == Some(self.active_value)).collect();
                        GroundTruth::two_level(self.levels.inactive_level, self.levels.active_level, active)?
                    }
                };
                Ok(Loaded {
                    graph: gml.graph,
                    truth: Some(truth),
                })
            }
            _ => Err(ScanError::invalid("exactly one of --graph or --gml is required")),
        }
    }

    /// Experiment source; without a graph file the two-subgraph generator is used.
    pub fn graph_source(&self, spec: &SpecArgs) -> Result<GraphSource> {
        match (&self.graph, &self.gml) {
            (Some(path), None) => {
                let truth = self
                    .truth
                    .clone()
                    .ok_or_else(|| ScanError::invalid("--graph needs --truth for simulated runs"))?;
                Ok(GraphSource::EdgeList {
                    path: path.clone(),
                    truth,
                })
            }
            (None, Some(path)) => Ok(GraphSource::Gml {
                path: path.clone(),
                active_value: self.active_value,
                inactive_level: self.levels.inactive_level,
                active_level: self.levels.active_level,
            }),
            (None, None) => Ok(GraphSource::TwoSubgraph(spec.spec(0, self.levels))),
            (Some(_), Some(_)) => Err(ScanError::invalid("--graph and --gml are exclusive")),
        }
    }
}

impl InputArgs {
    /// Graph with observations attached, plus the truth when one is known.
    pub fn load_observed(&self) -> Result<Loaded> {
        let Loaded { graph, truth } = self.source.load()?;
        let x = match (&self.attrs, &self.noise, &truth) {
            (Some(path), _, _) => io::load_attributes(&graph, path)?,
            (None, Some(noise), Some(t)) => apply_noise(t, &NoiseModel::new(noise.clone(), self.seed))?,
            (None, Some(_), None) => {
                return Err(ScanError::invalid("--noise needs a truth (--truth or --gml labels)"))
            }
            (None, None, _) => {
                return Err(ScanError::invalid("observations required: give --attrs or --noise"))
            }
        };
        Ok(Loaded {
            graph: graph.set_observations(x)?,
            truth,
        })
    }
}

/// Two-subgraph generator parameters.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SpecArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub n_big: usize,
    #[arg(long, default_value_t = 1_000)]
    pub n_small: usize,
    #[arg(long, default_value_t = 3)]
    pub out_degree: usize,
    #[arg(long, default_value_t = 20)]
    pub bridges: usize,
    #[arg(long, default_value_t = 0.5)]
    pub active_probability: f64,
}

impl SpecArgs {
    pub fn spec(&self, seed: u64, levels: LevelArgs) -> TwoSubgraphSpec {
        TwoSubgraphSpec {
            n_big: self.n_big,
            n_small: self.n_small,
            out_degree: self.out_degree,
            bridges: self.bridges,
            seed,
            inactive_level: levels.inactive_level,
            active_level: levels.active_level,
            active_probability: self.active_probability,
        }
    }
}

/// Parses `3`, `1,4,9` or `0..50` (half-open).
pub fn parse_seeds(s: &str) -> std::result::Result<Vec<u64>, String> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| format!("bad range start in `{s}`"))?;
        let hi: u64 = hi.trim().parse().map_err(|_| format!("bad range end in `{s}`"))?;
        if hi <= lo {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok((lo..hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("bad seed `{t}`")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("3").unwrap(), vec![3]);
        assert_eq!(parse_seeds("1, 4,9").unwrap(), vec![1, 4, 9]);
        assert_eq!(parse_seeds("2..5").unwrap(), vec![2, 3, 4]);
        assert!(parse_seeds("5..5").is_err());
        assert!(parse_seeds("x").is_err());
    }
}

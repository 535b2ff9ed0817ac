use std::path::{Path, PathBuf};

use clap::Args;
use knnscan::bounds::{check_assumption1, family_terms, selection_bound, BoundInputs, Provenance};
use knnscan::estimators::{crawler_estimates, scan};
use knnscan::io;
use knnscan::neighborhoods::build_family;
use knnscan::parallel::default_workers;
use knnscan::simulation::montecarlo::{write_histogram_csv, write_records_csv, write_summary_json};
use knnscan::simulation::{
    apply_noise, generate_two_subgraph, run_monte_carlo, AdversaryKind, AdversaryStrategy,
    ExperimentConfig, NoiseKind, NoiseModel,
};
use knnscan::{ScanError, ScanMode};
use serde::Serialize;
use serde_json::json;

use crate::input::{parse_seeds, InputArgs, LevelArgs, SourceArgs, SpecArgs};
use crate::CliError;

type CliResult = std::result::Result<(), CliError>;

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub levels: LevelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write noisy observations: gaussian:SIGMA | uniform:M
    #[arg(long)]
    pub noise: Option<NoiseKind>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Neighborhood size
    #[arg(long)]
    pub k: usize,
    /// sub (estimate a) or super (estimate b)
    #[arg(long, default_value = "sub")]
    pub mode: ScanMode,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Also write every root's neighborhood average to averages.csv
    #[arg(long)]
    pub averages: bool,
    /// Also write the neighborhood family to family.csv
    #[arg(long)]
    pub family: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExperimentArgs {
    /// JSON experiment config; replaces all graph, noise, k and seed flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value = "gaussian:1")]
    pub noise: NoiseKind,
    /// Seeds: `7`, `1,2,3` or a half-open range `0..100`
    #[arg(long, default_value = "0")]
    pub seeds: String,
    /// Keep one generated graph for all seeds instead of redrawing it
    #[arg(long)]
    pub fixed_graph: bool,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Neighborhood sizes, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., required_unless_present = "config")]
    pub ks: Vec<usize>,
    #[arg(long, default_value = "sub")]
    pub mode: ScanMode,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GameArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Neighborhood sizes, comma separated
    #[arg(long, value_delimiter = ',', num_args = 1.., required_unless_present = "config")]
    pub k: Vec<usize>,
    /// none | weak | strong | multistep
    #[arg(long, default_value = "multistep")]
    pub adversary: AdversaryKind,
    /// Activity the adversary assigns to the vertices it controls
    #[arg(long, default_value_t = 1e6)]
    pub influence: f64,
    /// Adversary moves allowed in a multi-step game
    #[arg(long, default_value_t = 10)]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub k: usize,
    /// Noise variance
    #[arg(long)]
    pub sigma2: Option<f64>,
    /// Almost-sure bound on |noise|
    #[arg(long = "M")]
    pub m: Option<f64>,
    /// Noise model supplying the variance and bound when they are not given
    #[arg(long)]
    pub noise: Option<NoiseKind>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CrawlerArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

fn prepare_out(out: &Path) -> Result<(), ScanError> {
    std::fs::create_dir_all(out).map_err(|e| ScanError::io(out, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), ScanError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| ScanError::io(path, e))
}

fn write_manifest(out: &Path, command: &str, config: &impl Serialize) -> Result<(), ScanError> {
    let manifest = json!({
        "tool": "knnscan",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
    });
    write_json(&out.join("manifest.json"), &manifest)
}

fn print_json(value: &impl Serialize) -> CliResult {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).map_err(ScanError::from)?;
    // a closed pipe (e.g. `| head`) is not a failure of the run
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn workers(w: Option<usize>) -> Result<usize, CliError> {
    match w {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(default_workers()),
    }
}

pub fn generate(a: &GenerateArgs) -> CliResult {
    let spec = a.spec.spec(a.seed, a.levels);
    let (g, truth) = generate_two_subgraph(&spec)?;
    prepare_out(&a.out)?;
    io::write_edge_list(&g, &a.out.join("graph.edges"))?;
    io::write_truth(&g, &truth, &a.out.join("truth.csv"))?;
    if let Some(noise) = &a.noise {
        let x = apply_noise(&truth, &NoiseModel::new(noise.clone(), a.seed))?;
        io::write_attributes(&g, &x, &a.out.join("attrs.csv"))?;
    }
    write_manifest(&a.out, "generate", &spec)?;
    print_json(&json!({
        "n": g.n(),
        "edges": g.edge_count(),
        "active": truth.active_count(),
    }))
}

pub fn estimate(a: &EstimateArgs) -> CliResult {
    let w = workers(a.workers)?;
    let loaded = a.input.load_observed()?;
    let g = loaded.graph;
    let family = build_family(&g, a.k)?;
    let result = scan(&g, &family, a.mode, w)?;
    prepare_out(&a.out)?;
    let report = result.report(&g);
    write_json(&a.out.join("scan.json"), &report)?;
    if a.averages {
        result.write_averages_csv(&g, &a.out.join("averages.csv"))?;
    }
    if a.family {
        family.write_csv(&a.out.join("family.csv"), w)?;
    }
    write_manifest(&a.out, "estimate", a)?;
    print_json(&report)
}

fn experiment_config(
    e: &ExperimentArgs,
    ks: &[usize],
    mode: ScanMode,
    adversary: AdversaryStrategy,
) -> Result<ExperimentConfig, CliError> {
    let config = match &e.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => {
            if ks.is_empty() {
                return Err(CliError::Usage("at least one k is required".into()));
            }
            ExperimentConfig {
                graph: e.source.graph_source(&e.spec)?,
                noise: e.noise.clone(),
                ks: ks.to_vec(),
                seeds: parse_seeds(&e.seeds).map_err(CliError::Usage)?,
                adversary,
                redraw_graph: !e.fixed_graph,
                mode,
                workers: Some(workers(e.workers)?),
                histogram_bins: e.bins,
            }
        }
    };
    config.validate()?;
    Ok(config)
}

fn run_experiment(command: &str, config: &ExperimentConfig, out: &Path) -> CliResult {
    let summary = run_monte_carlo(config)?;
    prepare_out(out)?;
    write_records_csv(&summary.records, &out.join("records.csv"))?;
    write_histogram_csv(&summary.per_k, &out.join("histogram.csv"))?;
    write_summary_json(&summary, &out.join("summary.json"))?;
    write_manifest(out, command, config)?;
    print_json(&summary.per_k)
}

pub fn sweep(a: &SweepArgs) -> CliResult {
    let config = experiment_config(&a.experiment, &a.ks, a.mode, AdversaryStrategy::default())?;
    run_experiment("sweep", &config, &a.experiment.out)
}

pub fn game(a: &GameArgs) -> CliResult {
    let strategy = AdversaryStrategy {
        kind: a.adversary,
        influence_value: a.influence,
        max_steps: a.max_steps,
    };
    let config = experiment_config(&a.experiment, &a.k, ScanMode::Sublevel, strategy)?;
    run_experiment("game", &config, &a.experiment.out)
}

pub fn bound(a: &BoundArgs) -> CliResult {
    let w = workers(a.workers)?;
    let loaded = a.source.load()?;
    let truth = loaded
        .truth
        .ok_or_else(|| ScanError::invalid("the bound needs a ground truth (--truth or --gml)"))?;
    let g = loaded.graph;
    let (sigma2, provenance) = match (a.sigma2, &a.noise) {
        (Some(s), _) => (s, Provenance::UserSupplied),
        (None, Some(n)) => (n.variance(), Provenance::GroundTruth),
        (None, None) => return Err(ScanError::invalid("give --sigma2 or --noise").into()),
    };
    let m = a.m.or_else(|| a.noise.as_ref().and_then(|n| n.bound()));
    let family = build_family(&g, a.k)?;
    let assumption = check_assumption1(g.graph(), &truth, a.k)?;
    let witness = assumption.witness.ok_or_else(|| {
        ScanError::invalid(format!("no inactive vertex has an all-inactive {}-neighborhood", a.k))
    })?;
    let k0 = family
        .neighborhood(witness)
        .ok_or_else(|| ScanError::invalid("witness neighborhood is not in the family"))?;
    let terms = family_terms(&family, &truth, &k0, w)?;
    let report = selection_bound(&BoundInputs {
        a: truth.a,
        b: truth.b,
        sigma2,
        m,
        k: a.k,
        terms,
        provenance,
    })?;
    prepare_out(&a.out)?;
    let out = json!({
        "k": a.k,
        "k0_root": g.labels().label(witness),
        "report": report,
    });
    write_json(&a.out.join("bound.json"), &out)?;
    write_manifest(&a.out, "bound", a)?;
    print_json(&out)
}

pub fn crawler(a: &CrawlerArgs) -> CliResult {
    let w = workers(a.workers)?;
    let loaded = a.input.load_observed()?;
    let g = loaded.graph;
    let family = build_family(&g, a.k)?;
    let result = scan(&g, &family, ScanMode::Sublevel, w)?;
    let est = crawler_estimates(&g, &result)?;
    prepare_out(&a.out)?;
    est.ecdf.write_csv(&a.out.join("ecdf.csv"))?;
    // With a known noise model, compare against the true distribution of a + ε.
    let sup_distance = match (&a.input.noise, &loaded.truth, &a.input.attrs) {
        (Some(noise), Some(t), None) => Some(est.ecdf.sup_distance(|x| noise.cdf(x - t.a))),
        _ => None,
    };
    let out = json!({
        "k": a.k,
        "root": g.labels().label(result.root()),
        "estimate": result.estimate,
        "sigma2_hat": est.sigma2_hat,
        "samples": est.ecdf.len(),
        "sup_distance": sup_distance,
    });
    write_json(&a.out.join("crawler.json"), &out)?;
    write_manifest(&a.out, "crawler", a)?;
    print_json(&out)
}

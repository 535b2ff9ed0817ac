//! `knnscan`: k-NN graph scan estimation from the command line.
//!
//! Every subcommand writes its outputs and a `manifest.json` echoing the
//! resolved configuration into `--out`.
//!
//! Exit codes: 0 success, 2 usage, 3 input (unreadable or malformed files),
//! 4 validation (bad k, separation, missing noise bound, ...), 5 estimation.

mod commands;
mod input;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use knnscan::ScanError;

use commands::{BoundArgs, CrawlerArgs, EstimateArgs, GameArgs, GenerateArgs, SweepArgs};

#[derive(Debug, Parser)]
#[command(name = "knnscan", version, about = "k-NN graph scan estimators and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a two-subgraph instance with its ground truth
    Generate(GenerateArgs),
    /// Run one scan and report the selected neighborhood and estimate
    Estimate(EstimateArgs),
    /// Monte Carlo over seeds and a list of k
    Sweep(SweepArgs),
    /// Play scan/adversary games over seeds
    Game(GameArgs),
    /// Evaluate the selection-risk union bound
    Bound(BoundArgs),
    /// Estimate the noise variance and distribution from the selected neighborhood
    Crawler(CrawlerArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Scan(ScanError),
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        CliError::Scan(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Scan(e) => match e {
                ScanError::Io { .. }
                | ScanError::Parse { .. }
                | ScanError::EmptyGraph
                | ScanError::DuplicateEdge(..)
                | ScanError::UnsupportedGml(_)
                | ScanError::Gml(_)
                | ScanError::Csv(_)
                | ScanError::Json(_) => 3,
                ScanError::EmptyFamily | ScanError::TooFewObservations(_) => 5,
                _ => 4,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Scan(e) => write!(f, "{e}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Game(a) => commands::game(a),
        Command::Bound(a) => commands::bound(a),
        Command::Crawler(a) => commands::crawler(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("knnscan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Synthetic instances, noise, adversaries and Monte Carlo drivers.

pub mod adversary;
pub mod game;
pub mod generator;
pub mod montecarlo;
pub mod noise;

pub use adversary::{adversary_act, AdversaryKind, AdversaryStrategy, World};
pub use game::{play_multistep_game, GameRecord, GameStep};
pub use generator::{generate_two_subgraph, TwoSubgraphSpec};
pub use montecarlo::{run_instance, run_monte_carlo, ExperimentConfig, GraphSource, KSummary, MonteCarloSummary, SeedRecord};
pub use noise::{apply_noise, NoiseKind, NoiseModel};

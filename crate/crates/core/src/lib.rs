//! k-nearest-neighbor graph scan estimators.
//!
//! Vertices of an undirected graph carry a noisy observation `X_v = A_v + ε_v`
//! where the hidden activity `A_v` equals a common baseline `a` on inactive
//! vertices and is at least `b > a` on active ones. The sublevel scan picks,
//! among one exact `k`-vertex BFS neighborhood per vertex, the neighborhood
//! with the smallest observed sum and reports its average as the estimate of
//! `a`. The superlevel scan is the mirror image for `b`, and the selected
//! neighborhood also yields estimates of the noise distribution and variance.
//!
//! Module map:
//!
//! - [`graph`] and [`io`]: immutable CSR graphs, observations, file ingestion.
//! - [`neighborhoods`]: BFS layers, exact `m`-neighborhoods, per-vertex families.
//! - [`estimators`]: the two-phase scan, superlevel dual, crawler estimators.
//! - [`bounds`]: Bernstein tail, the selection-risk functional and union bound.
//! - [`simulation`]: two-subgraph generator, noise, adversaries, Monte Carlo.

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod io;
pub mod neighborhoods;
pub mod numeric;
pub mod parallel;
pub mod rng;
pub mod simulation;

pub use error::{Result, ScanError};
pub use graph::{AttributedGraph, Graph, GroundTruth, IngestReport, VertexId};
pub use neighborhoods::{ExactNeighborhood, LayeredNeighborhood, NeighborhoodFamily};
pub use estimators::{CrawlerEstimate, ScanMode, ScanResult};

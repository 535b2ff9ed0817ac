use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::estimators::ScanResult;
use crate::graph::{AttributedGraph, GroundTruth, VertexId};

/// Hidden state of one experiment: the truth, which the adversary may alter,
/// and the realized noise, which it may not.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub truth: GroundTruth,
    epsilon: Vec<f64>,
}

impl World {
    pub fn new(truth: GroundTruth, epsilon: Vec<f64>) -> Result<Self> {
        if truth.len() != epsilon.len() {
            return Err(ScanError::LengthMismatch {
                expected: truth.len(),
                got: epsilon.len(),
            });
        }
        Ok(Self { truth, epsilon })
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn observations(&self) -> Vec<f64> {
        self.truth
            .activity
            .iter()
            .zip(&self.epsilon)
            .map(|(a, e)| a + e)
            .collect()
    }

    /// `g` carrying the current observations.
    pub fn attach(&self, g: &AttributedGraph) -> Result<AttributedGraph> {
        g.set_observations(self.observations())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    #[default]
    None,
    /// Influences the active vertices of the selected neighborhood, once.
    WeakLocal,
    /// Influences every active vertex, once.
    StrongGlobal,
    /// Repeats the local attack after every scan.
    MultiStep,
}

impl FromStr for AdversaryKind {
    type Err = ScanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AdversaryKind::None),
            "weak" | "weak_local" => Ok(AdversaryKind::WeakLocal),
            "strong" | "strong_global" => Ok(AdversaryKind::StrongGlobal),
            "multistep" | "multi_step" => Ok(AdversaryKind::MultiStep),
            _ => Err(ScanError::invalid(format!("unknown adversary `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdversaryStrategy {
    pub kind: AdversaryKind,
    pub influence_value: f64,
    /// Number of adversary moves allowed in a multi-step game.
    pub max_steps: usize,
}

impl Default for AdversaryStrategy {
    fn default() -> Self {
        Self {
            kind: AdversaryKind::None,
            influence_value: 1e6,
            max_steps: 10,
        }
    }
}

impl AdversaryStrategy {
    pub fn new(kind: AdversaryKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    /// How many times the adversary gets to move.
    pub fn moves(&self) -> usize {
        match self.kind {
            AdversaryKind::None => 0,
            AdversaryKind::WeakLocal | AdversaryKind::StrongGlobal => 1,
            AdversaryKind::MultiStep => self.max_steps,
        }
    }
}

/// Applies one adversary move after `scan` and returns the vertices whose
/// activity changed, ascending. Only active vertices are ever touched and the
/// realized noise stays as it was.
pub fn adversary_act(
    world: &mut World,
    scan: &ScanResult,
    strategy: &AdversaryStrategy,
) -> Result<Vec<VertexId>> {
    let value = strategy.influence_value;
    if !(value >= world.truth.b) || !value.is_finite() {
        return Err(ScanError::Separation(format!(
            "influence value {value} must be finite and at least b={}",
            world.truth.b
        )));
    }
    let targets: Vec<VertexId> = match strategy.kind {
        AdversaryKind::None => Vec::new(),
        AdversaryKind::WeakLocal | AdversaryKind::MultiStep => scan.selected.members.clone(),
        AdversaryKind::StrongGlobal => (0..world.truth.len()).map(VertexId::from).collect(),
    };
    let mut mutated = Vec::new();
    for v in targets {
        let i = v.index();
        if world.truth.active[i] && world.truth.activity[i] != value {
            world.truth.activity[i] = value;
            mutated.push(v);
        }
    }
    world.truth.audit()?;
    Ok(mutated)
}

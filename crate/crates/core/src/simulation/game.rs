use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{scan, ScanMode};
use crate::graph::{AttributedGraph, VertexId};
use crate::neighborhoods::NeighborhoodFamily;

use super::adversary::{adversary_act, AdversaryStrategy, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameStep {
    pub step: usize,
    pub root: VertexId,
    pub estimate: f64,
    /// Active vertices inside `K̂` at this step.
    pub active_in_selection: usize,
    /// Vertices the adversary changed after this scan.
    pub mutated: Vec<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub steps: Vec<GameStep>,
    /// `N_w`: the first step whose `K̂` holds no active vertex.
    pub winning_step: Option<usize>,
    pub won: bool,
    pub initial_estimate: f64,
    pub final_estimate: f64,
}

/// Alternates sublevel scans and adversary moves.
///
/// Step `s` scans the current observations; if `K̂` is active-free the game is
/// won at `s`, otherwise the adversary moves, as long as it has moves left.
/// The one-shot adversaries get a single move followed by a rescan; `none`
/// only scans once. `world` is left in its final, possibly mutated, state.
pub fn play_multistep_game(
    g: &AttributedGraph,
    family: &NeighborhoodFamily,
    world: &mut World,
    strategy: &AdversaryStrategy,
    workers: usize,
) -> Result<GameRecord> {
    let moves = strategy.moves();
    let mut steps = Vec::new();
    let mut winning_step = None;
    for step in 0..=moves {
        let attached = world.attach(g)?;
        let result = scan(&attached, family, ScanMode::Sublevel, workers)?;
        let active_in_selection = result
            .selected
            .members
            .iter()
            .filter(|&&v| world.truth.is_active(v))
            .count();
        let mut record = GameStep {
            step,
            root: result.root(),
            estimate: result.estimate,
            active_in_selection,
            mutated: Vec::new(),
        };
        if active_in_selection == 0 {
            winning_step = Some(step);
            steps.push(record);
            break;
        }
        if step < moves {
            record.mutated = adversary_act(world, &result, strategy)?;
        }
        steps.push(record);
    }
    Ok(GameRecord {
        initial_estimate: steps[0].estimate,
        final_estimate: steps.last().expect("at least one scan").estimate,
        won: winning_step.is_some(),
        winning_step,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{DuplicatePolicy, Graph, GroundTruth, LabelMap};
    use crate::neighborhoods::build_family;
    use crate::simulation::adversary::AdversaryKind;

    fn cycle(active: Vec<bool>, eps: Vec<f64>) -> (AttributedGraph, World) {
        let n = active.len();
        let edges = (0..n as u32).map(|i| (i, (i + 1) % n as u32));
        let (g, _) = Graph::from_edges(n, edges, LabelMap::Identity(n), DuplicatePolicy::Merge).unwrap();
        let truth = GroundTruth::two_level(2.0, 10.0, active).unwrap();
        (AttributedGraph::new(g), World::new(truth, eps).unwrap())
    }

    #[test]
    fn immediate_win() {
        let (g, mut world) = cycle(
            vec![false, false, false, true, false, false],
            vec![-1.0, -1.0, 0.0, 0.0, 0.5, 0.0],
        );
        let fam = build_family(&world.attach(&g).unwrap(), 2).unwrap();
        let strategy = AdversaryStrategy::new(AdversaryKind::MultiStep);
        let rec = play_multistep_game(&g, &fam, &mut world, &strategy, 1).unwrap();
        assert_eq!(rec.winning_step, Some(0));
        assert!(rec.won);
        assert_eq!(rec.steps.len(), 1);
        assert_eq!(rec.final_estimate, 1.0);
    }

    #[test]
    fn adversary_pushes_selection_away() {
        // an active vertex with a very negative error wins step 0
        let (g, mut world) = cycle(
            vec![true, false, false, false, false, false, false, false],
            vec![-20.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5, 0.5],
        );
        let fam = build_family(&world.attach(&g).unwrap(), 2).unwrap();
        let strategy = AdversaryStrategy::new(AdversaryKind::MultiStep);
        let rec = play_multistep_game(&g, &fam, &mut world, &strategy, 1).unwrap();
        assert_eq!(rec.steps[0].active_in_selection, 1);
        assert_eq!(rec.steps[0].mutated, vec![VertexId(0)]);
        assert_eq!(rec.winning_step, Some(1));
        assert_eq!(rec.final_estimate, 2.0);
        assert!(rec.initial_estimate < 0.0);
    }

    #[test]
    fn game_can_be_lost() {
        let (g, mut world) = cycle(vec![true, false, true, false], vec![-20.0, 0.0, -20.0, 0.0]);
        let fam = build_family(&world.attach(&g).unwrap(), 2).unwrap();
        let strategy = AdversaryStrategy {
            kind: AdversaryKind::MultiStep,
            max_steps: 3,
            ..AdversaryStrategy::default()
        };
        let rec = play_multistep_game(&g, &fam, &mut world, &strategy, 1).unwrap();
        // every 2-neighborhood of a 4-cycle with alternating activity has an active vertex
        assert!(!rec.won);
        assert_eq!(rec.winning_step, None);
        assert_eq!(rec.steps.len(), 4);
        assert!(rec.steps[3].mutated.is_empty());
    }

    #[test]
    fn none_scans_once() {
        let (g, mut world) = cycle(vec![true, false, true, false], vec![0.0; 4]);
        let fam = build_family(&world.attach(&g).unwrap(), 2).unwrap();
        let rec =
            play_multistep_game(&g, &fam, &mut world, &AdversaryStrategy::default(), 1).unwrap();
        assert_eq!(rec.steps.len(), 1);
        assert_eq!(rec.initial_estimate, rec.final_estimate);
    }
}

mod common;

use knnscan::bounds::pairing_deltas;
use knnscan::estimators::scan;
use knnscan::neighborhoods::build_family;
use knnscan::simulation::{NoiseKind, NoiseModel};
use knnscan::{AttributedGraph, ScanMode};
use proptest::prelude::*;
use rand::Rng;

use common::*;

/// Random graph with dyadic observations, so shifts and sums are exact.
fn instance(seed: u64) -> (AttributedGraph, usize) {
    let mut rng = rng(seed);
    loop {
        let n = rng.random_range(3..=30);
        let p = rng.random_range(0.05..0.4);
        let g = AttributedGraph::new(random_graph(&mut rng, n, p));
        let k = rng.random_range(1..=5.min(n));
        if build_family(&g, k).is_ok() {
            let x = (0..n).map(|_| rng.random_range(-512i32..512) as f64 / 64.0).collect();
            return (g.set_observations(x).unwrap(), k);
        }
    }
}

fn with_x(g: &AttributedGraph, f: impl Fn(f64) -> f64) -> AttributedGraph {
    let x = g.observations().unwrap().iter().map(|&v| f(v)).collect();
    g.set_observations(x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shift_moves_estimate_and_keeps_root(seed in any::<u64>(), c in -64i32..64) {
        let c = c as f64 / 8.0;
        let (g, k) = instance(seed);
        let family = build_family(&g, k).unwrap();
        for mode in [ScanMode::Sublevel, ScanMode::Superlevel] {
            let base = scan(&g, &family, mode, 1).unwrap();
            let shifted = scan(&with_x(&g, |v| v + c), &family, mode, 1).unwrap();
            prop_assert_eq!(shifted.root(), base.root());
            prop_assert_eq!(&shifted.ties, &base.ties);
            prop_assert!((shifted.estimate - (base.estimate + c)).abs() <= 1e-12);
        }
    }

    #[test]
    fn power_of_two_scaling_is_exact(seed in any::<u64>(), e in -20i32..20) {
        let s = 2f64.powi(e);
        let (g, k) = instance(seed);
        let family = build_family(&g, k).unwrap();
        let base = scan(&g, &family, ScanMode::Sublevel, 1).unwrap();
        let scaled = scan(&with_x(&g, |v| v * s), &family, ScanMode::Sublevel, 1).unwrap();
        prop_assert_eq!(scaled.root(), base.root());
        prop_assert_eq!(scaled.estimate.to_bits(), (base.estimate * s).to_bits());
    }

    #[test]
    fn superlevel_is_the_dual_of_sublevel(seed in any::<u64>()) {
        let (g, k) = instance(seed);
        let family = build_family(&g, k).unwrap();
        let sub = scan(&g, &family, ScanMode::Sublevel, 1).unwrap();
        let sup = scan(&with_x(&g, |v| -v), &family, ScanMode::Superlevel, 1).unwrap();
        prop_assert_eq!(sup.root(), sub.root());
        prop_assert_eq!(&sup.ties, &sub.ties);
        prop_assert_eq!(sup.estimate.to_bits(), (-sub.estimate).to_bits());
    }
}

fn pairing_check(kind: NoiseKind, variance: f64) {
    let eps = NoiseModel::new(kind, 11).realize(200_000).unwrap();
    let deltas = pairing_deltas(&eps).unwrap();
    let m = mean(&deltas);
    let v = sample_variance(&deltas);
    let se_mean = (2.0 * variance / deltas.len() as f64).sqrt();
    assert!(m.abs() < 5.0 * se_mean, "mean {m}");
    assert!((v / (2.0 * variance) - 1.0).abs() < 0.03, "variance {v}");
    let mirrored: Vec<f64> = deltas.iter().map(|d| -d).collect();
    let d = ks_two_sample(&deltas, &mirrored);
    assert!(d < 0.01, "KS distance to the mirror image {d}");
}

#[test]
fn pairing_differences_are_symmetric_with_doubled_variance() {
    pairing_check(NoiseKind::Gaussian { sigma: 1.5 }, 2.25);
    pairing_check(NoiseKind::Uniform { bound: 1.0 }, 1.0 / 3.0);
}

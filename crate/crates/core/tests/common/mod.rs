//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use knnscan::graph::{DuplicatePolicy, LabelMap};
use knnscan::{Graph, VertexId};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi style graph with `n` vertices and edge probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges, LabelMap::Identity(n), DuplicatePolicy::Merge)
        .unwrap()
        .0
}

pub fn graph_from(n: usize, edges: &[(u32, u32)]) -> Graph {
    Graph::from_edges(n, edges.iter().copied(), LabelMap::Identity(n), DuplicatePolicy::Merge)
        .unwrap()
        .0
}

/// Literal walk sets: `N_0 = {v}`, `N_i` = endpoints of edges leaving `N_{i-1}`.
pub fn walk_sets(g: &Graph, v: VertexId, upto: usize) -> Vec<BTreeSet<VertexId>> {
    let mut sets = vec![BTreeSet::from([v])];
    for _ in 0..upto {
        let prev = sets.last().unwrap();
        let next: BTreeSet<VertexId> = prev.iter().flat_map(|&u| g.neighbors(u)).collect();
        sets.push(next);
    }
    sets
}

/// `Ω_k = ∪_{i<=k} N_i`.
pub fn omega(walks: &[BTreeSet<VertexId>], k: usize) -> BTreeSet<VertexId> {
    walks[..=k].iter().flatten().copied().collect()
}

/// Level sets `N_i \ ∪_{j<i} N_j`.
pub fn level_sets(walks: &[BTreeSet<VertexId>]) -> Vec<BTreeSet<VertexId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for n in walks {
        let d: BTreeSet<VertexId> = n.difference(&seen).copied().collect();
        seen.extend(n.iter().copied());
        out.push(d);
    }
    out
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

fn is_odd(x: f64) -> bool {
    x.to_bits() & 1 == 1
}

/// Nearest `f64` to `r`, ties to even, found by bracketing with `next_up`/`next_down`.
pub fn round_rational(r: &BigRational) -> f64 {
    let approx = {
        let n: f64 = r.numer().to_string().parse().unwrap_or(0.0);
        let d: f64 = r.denom().to_string().parse().unwrap_or(1.0);
        n / d
    };
    let mut q = if approx.is_finite() { approx } else { 0.0 };
    for _ in 0..4096 {
        let up = q.next_up();
        let down = q.next_down();
        let mid_up = (rational(q) + rational(up)) / BigInt::from(2);
        let mid_down = (rational(q) + rational(down)) / BigInt::from(2);
        if *r > mid_up || (*r == mid_up && is_odd(q)) {
            q = up;
        } else if *r < mid_down || (*r == mid_down && is_odd(q)) {
            q = down;
        } else {
            return q;
        }
    }
    panic!("rounding did not converge");
}

pub fn exact_rational_sum(values: impl IntoIterator<Item = f64>) -> BigRational {
    values.into_iter().map(rational).sum()
}

/// Kolmogorov–Smirnov statistic between two samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

//! Concentration bounds for neighborhood selection.
//!
//! For an all-inactive reference set `K₀` and a competitor `K` of the same
//! size, the margin
//!
//! ```text
//! R(K) = (b - a)·S₁(K) + Σ_{active v ∈ K} (A_v - b)
//! ```
//!
//! is how much larger `E[S_K]` is than `E[S_K₀]`. With noise bounded by `M`
//! and variance `σ²`, pairing the noise terms of `K \ K₀` and `K₀ \ K` and
//! applying Bernstein's inequality gives
//!
//! ```text
//! P(S_K < S_K₀) <= exp(-3R² / (12σ²|K \ K₀| + 4M·R))
//! ```
//!
//! and a union bound over a collection of competitors bounds the chance
//! that any of them beats `K₀`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ScanError};
use crate::graph::{Graph, GroundTruth, VertexId};
use crate::neighborhoods::{ExactNeighborhood, NeighborhoodFamily};
use crate::numeric::ExactSum;

/// `R = (b - a)·S₁ + excess`.
pub fn r_functional(s1: usize, b_minus_a: f64, excess: f64) -> Result<f64> {
    if !(b_minus_a > 0.0) || !b_minus_a.is_finite() {
        return Err(ScanError::invalid(format!("b - a must be positive, got {b_minus_a}")));
    }
    if !(excess >= 0.0) || !excess.is_finite() {
        return Err(ScanError::invalid(format!("excess must be non-negative, got {excess}")));
    }
    Ok(b_minus_a * s1 as f64 + excess)
}

/// Bernstein tail `P(Σ X_i > t) <= exp(-(t²/2) / (Σ E X_i² + M t / 3))`,
/// clamped to `(0, 1]`.
pub fn bernstein_tail(t: f64, sum_var: f64, m: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(ScanError::invalid(format!("t must be positive, got {t}")));
    }
    if !(sum_var >= 0.0) || !sum_var.is_finite() {
        return Err(ScanError::invalid(format!("variance sum must be non-negative, got {sum_var}")));
    }
    if !(m > 0.0) || !m.is_finite() {
        return Err(ScanError::invalid(format!("M must be positive, got {m}")));
    }
    let exponent = -(t * t / 2.0) / (sum_var + m * t / 3.0);
    Ok(exponent.exp().clamp(f64::MIN_POSITIVE, 1.0))
}

/// Single-competitor bound `exp(-3R² / (12σ²·overlap + 4M·R))`.
pub fn selection_term(r: f64, sigma2: f64, overlap_defect: usize, m: f64) -> f64 {
    let denom = 12.0 * sigma2 * overlap_defect as f64 + 4.0 * m * r;
    if r == 0.0 || denom == 0.0 {
        return 1.0;
    }
    (-3.0 * r * r / denom).exp()
}

/// Summary of one competitor `K` relative to `K₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub root: Option<VertexId>,
    /// `S₁(K)`: number of active members.
    pub s1: usize,
    /// `Σ_{active v ∈ K} (A_v - b)`.
    pub excess: f64,
    /// `|K \ K₀|`.
    pub overlap_defect: usize,
}

impl BoundTerm {
    pub fn from_sets(truth: &GroundTruth, k0: &[VertexId], k: &ExactNeighborhood) -> BoundTerm {
        let mut excess = ExactSum::new();
        let mut s1 = 0;
        for &v in &k.members {
            if truth.is_active(v) {
                s1 += 1;
                excess.add(truth.activity[v.index()] - truth.b);
            }
        }
        let overlap_defect = k.members.iter().filter(|v| k0.binary_search(v).is_err()).count();
        BoundTerm {
            root: Some(k.root),
            s1,
            excess: excess.value(),
            overlap_defect,
        }
    }
}

/// Where `σ²` and `M` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GroundTruth,
    Estimated,
    UserSupplied,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundInputs {
    pub a: f64,
    pub b: f64,
    pub sigma2: f64,
    /// Almost-sure noise bound; the selection bound is undefined without it.
    pub m: Option<f64>,
    pub k: usize,
    pub terms: Vec<BoundTerm>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermValue {
    pub root: Option<VertexId>,
    pub r: f64,
    pub overlap_defect: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub raw_sum: f64,
    pub clamped: f64,
    /// Competitors with `R = 0` other than `K₀` itself; each contributes 1.
    pub degenerate_terms: usize,
    /// Competitors identical to `K₀` (left out of the sum).
    pub excluded_terms: usize,
    pub per_term_top10: Vec<TermValue>,
    pub sigma2: f64,
    pub m: f64,
    pub provenance: Provenance,
}

/// Union bound over `inputs.terms` on the probability that some competitor
/// has a smaller sum than `K₀`.
pub fn selection_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    let m = inputs.m.ok_or(ScanError::MissingNoiseBound)?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(ScanError::invalid(format!("M must be positive, got {m}")));
    }
    if !(inputs.sigma2 >= 0.0) || !inputs.sigma2.is_finite() {
        return Err(ScanError::invalid(format!("σ² must be non-negative, got {}", inputs.sigma2)));
    }
    let b_minus_a = inputs.b - inputs.a;
    let mut total = ExactSum::new();
    let mut degenerate = 0;
    let mut excluded = 0;
    let mut values = Vec::with_capacity(inputs.terms.len());
    for term in &inputs.terms {
        if term.s1 > term.overlap_defect {
            return Err(ScanError::invalid(format!(
                "term {:?}: S1={} exceeds |K \\ K0|={}",
                term.root, term.s1, term.overlap_defect
            )));
        }
        let r = r_functional(term.s1, b_minus_a, term.excess)?;
        if r == 0.0 && term.overlap_defect == 0 {
            excluded += 1;
            continue;
        }
        if r == 0.0 {
            degenerate += 1;
        }
        let value = selection_term(r, inputs.sigma2, term.overlap_defect, m);
        total.add(value);
        values.push(TermValue {
            root: term.root,
            r,
            overlap_defect: term.overlap_defect,
            value,
        });
    }
    values.sort_by(|x, y| y.value.total_cmp(&x.value).then(x.root.cmp(&y.root)));
    values.truncate(10);
    let raw_sum = total.value();
    Ok(BoundReport {
        raw_sum,
        clamped: raw_sum.min(1.0),
        degenerate_terms: degenerate,
        excluded_terms: excluded,
        per_term_top10: values,
        sigma2: inputs.sigma2,
        m,
        provenance: inputs.provenance,
    })
}

/// One term per family member, measured against `k0`.
pub fn family_terms(
    family: &NeighborhoodFamily,
    truth: &GroundTruth,
    k0: &ExactNeighborhood,
    workers: usize,
) -> Result<Vec<BoundTerm>> {
    if truth.len() != family.graph().n() {
        return Err(ScanError::LengthMismatch {
            expected: family.graph().n(),
            got: truth.len(),
        });
    }
    if k0.len() != family.k() {
        return Err(ScanError::invalid("K0 must have exactly k members"));
    }
    if let Some(v) = k0.members.iter().find(|&&v| truth.is_active(v)) {
        return Err(ScanError::invalid(format!("K0 contains active vertex {v}")));
    }
    let k0_members = &k0.members;
    let terms = family.map_roots(workers, |root, members, _| {
        let mut sorted: Vec<VertexId> = members.iter().map(|&u| VertexId(u)).collect();
        sorted.sort_unstable();
        let nb = ExactNeighborhood {
            root,
            members: sorted,
            inner_radius: 0,
            truncated_last_layer: Vec::new(),
        };
        BoundTerm::from_sets(truth, k0_members, &nb)
    })?;
    Ok(terms.into_iter().flatten().collect())
}

/// `Δ_i = ε_i - ε_{i+r}` for an input of length `2r`.
pub fn pairing_deltas(eps: &[f64]) -> Result<Vec<f64>> {
    if eps.len() % 2 != 0 {
        return Err(ScanError::OddLength(eps.len()));
    }
    let (head, tail) = eps.split_at(eps.len() / 2);
    Ok(head.iter().zip(tail).map(|(x, y)| x - y).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assumption1 {
    pub holds: bool,
    /// Smallest-id inactive vertex whose full `k`-neighborhood is inactive.
    pub witness: Option<VertexId>,
}

/// Looks for an inactive vertex whose full `k`-neighborhood `Ω_r` (smallest
/// ball with at least `k` vertices) contains no active vertex.
pub fn check_assumption1(g: &Graph, truth: &GroundTruth, k: usize) -> Result<Assumption1> {
    if k == 0 {
        return Err(ScanError::invalid("k must be at least 1"));
    }
    if truth.len() != g.n() {
        return Err(ScanError::LengthMismatch {
            expected: g.n(),
            got: truth.len(),
        });
    }
    let mut stamp = vec![u32::MAX; g.n()];
    let mut ball: Vec<u32> = Vec::new();
    'roots: for v in 0..g.n() as u32 {
        if truth.active[v as usize] {
            continue;
        }
        ball.clear();
        ball.push(v);
        stamp[v as usize] = v;
        let mut layer_start = 0;
        while ball.len() < k {
            let layer_end = ball.len();
            for i in layer_start..layer_end {
                for &w in g.neighbors_raw(ball[i]) {
                    if stamp[w as usize] != v {
                        if truth.active[w as usize] {
                            continue 'roots;
                        }
                        stamp[w as usize] = v;
                        ball.push(w);
                    }
                }
            }
            if ball.len() == layer_end {
                continue 'roots;
            }
            layer_start = layer_end;
        }
        return Ok(Assumption1 {
            holds: true,
            witness: Some(VertexId(v)),
        });
    }
    Ok(Assumption1 {
        holds: false,
        witness: None,
    })
}

use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Result, ScanError};
use crate::graph::GroundTruth;
use crate::rng::{Purpose, StreamFactory};

/// Zero-mean noise distribution of the crawler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseKind {
    Gaussian { sigma: f64 },
    /// Uniform on `[-bound, bound]`.
    Uniform { bound: f64 },
    /// Finite support with the given probabilities; must have mean zero.
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub kind: NoiseKind,
    #[serde(default)]
    pub seed: u64,
}

impl NoiseKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseKind::Gaussian { sigma } if !(*sigma >= 0.0 && sigma.is_finite()) => {
                Err(ScanError::invalid(format!("gaussian sigma must be >= 0, got {sigma}")))
            }
            NoiseKind::Uniform { bound } if !(*bound >= 0.0 && bound.is_finite()) => {
                Err(ScanError::invalid(format!("uniform bound must be >= 0, got {bound}")))
            }
            NoiseKind::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(ScanError::invalid("discrete noise needs matching values/probs"));
                }
                if probs.iter().any(|p| !(*p >= 0.0)) {
                    return Err(ScanError::invalid("discrete probabilities must be >= 0"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(ScanError::invalid(format!("probabilities sum to {total}")));
                }
                let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
                let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                if mean.abs() > 1e-9 * scale {
                    return Err(ScanError::invalid(format!("discrete noise has mean {mean}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            NoiseKind::Gaussian { sigma } => sigma * sigma,
            NoiseKind::Uniform { bound } => bound * bound / 3.0,
            NoiseKind::Discrete { values, probs } => {
                values.iter().zip(probs).map(|(v, p)| p * v * v).sum()
            }
        }
    }

    /// Almost-sure bound `M` on `|ε|`, if the distribution has one.
    pub fn bound(&self) -> Option<f64> {
        match self {
            NoiseKind::Gaussian { sigma } if *sigma == 0.0 => Some(0.0),
            NoiseKind::Gaussian { .. } => None,
            NoiseKind::Uniform { bound } => Some(*bound),
            NoiseKind::Discrete { values, .. } => {
                Some(values.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            NoiseKind::Gaussian { sigma } if *sigma == 0.0 => (t >= 0.0) as u8 as f64,
            NoiseKind::Gaussian { sigma } => Normal::new(0.0, *sigma).map(|n| n.cdf(t)).unwrap_or(f64::NAN),
            NoiseKind::Uniform { bound } if *bound == 0.0 => (t >= 0.0) as u8 as f64,
            NoiseKind::Uniform { bound } => ((t + bound) / (2.0 * bound)).clamp(0.0, 1.0),
            NoiseKind::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(v, _)| **v <= t)
                .map(|(_, p)| p)
                .sum(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseKind::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseKind::Uniform { bound } if *bound == 0.0 => 0.0,
            NoiseKind::Uniform { bound } => rng.random_range(-bound..=*bound),
            NoiseKind::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
        }
    }
}

impl FromStr for NoiseKind {
    type Err = ScanError;

    /// `gaussian:<sigma>`, `uniform:<M>` or `none`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = || {
            arg.parse::<f64>()
                .map_err(|_| ScanError::invalid(format!("noise `{s}`: bad parameter `{arg}`")))
        };
        let kind = match name {
            "gaussian" | "normal" => NoiseKind::Gaussian { sigma: num()? },
            "uniform" => NoiseKind::Uniform { bound: num()? },
            "none" => NoiseKind::Gaussian { sigma: 0.0 },
            _ => return Err(ScanError::invalid(format!("unknown noise `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, seed: u64) -> Self {
        Self { kind, seed }
    }

    /// `ε_v` for every vertex. Draw `v` depends only on `(seed, v)`.
    pub fn realize(&self, n: usize) -> Result<Vec<f64>> {
        self.kind.validate()?;
        let streams = StreamFactory::new(self.seed);
        Ok((0..n)
            .into_par_iter()
            .map(|v| self.kind.sample(&mut streams.stream(Purpose::Noise, v as u64)))
            .collect())
    }
}

/// `X_v = A_v + ε_v`.
pub fn apply_noise(truth: &GroundTruth, noise: &NoiseModel) -> Result<Vec<f64>> {
    let eps = noise.realize(truth.len())?;
    Ok(truth.activity.iter().zip(&eps).map(|(a, e)| a + e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::mean_and_variance;

    fn truth(n: usize) -> GroundTruth {
        GroundTruth::two_level(2.0, 10.0, vec![false; n]).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let t = truth(50);
        let x = apply_noise(&t, &NoiseModel::new(NoiseKind::Gaussian { sigma: 0.0 }, 1)).unwrap();
        assert_eq!(x, t.activity);
    }

    #[test]
    fn gaussian_moments() {
        let n = 100_000;
        let x = apply_noise(&truth(n), &NoiseModel::new(NoiseKind::Gaussian { sigma: 1.0 }, 7)).unwrap();
        let (m, v) = mean_and_variance(&x).unwrap();
        assert!((m - 2.0).abs() < 4.0 / (n as f64).sqrt(), "mean {m}");
        // sd of the sample variance is sqrt(2/n) for unit gaussian
        assert!((v - 1.0).abs() < 4.0 * (2.0 / n as f64).sqrt(), "var {v}");
    }

    #[test]
    fn uniform_is_bounded() {
        let t = truth(20_000);
        let x = apply_noise(&t, &NoiseModel::new(NoiseKind::Uniform { bound: 3.0 }, 2)).unwrap();
        assert!(x.iter().all(|v| (v - 2.0).abs() <= 3.0));
        let (_, v) = mean_and_variance(&x).unwrap();
        assert!((v - 3.0).abs() < 0.1);
    }

    #[test]
    fn draws_are_indexed_by_vertex() {
        let m = NoiseModel::new(NoiseKind::Gaussian { sigma: 1.0 }, 5);
        let short = m.realize(10).unwrap();
        let long = m.realize(1000).unwrap();
        assert_eq!(short[..], long[..10]);
    }

    #[test]
    fn discrete_noise() {
        let kind = NoiseKind::Discrete {
            values: vec![-1.0, 2.0],
            probs: vec![2.0 / 3.0, 1.0 / 3.0],
        };
        kind.validate().unwrap();
        assert!((kind.variance() - 2.0).abs() < 1e-12);
        assert_eq!(kind.bound(), Some(2.0));
        let bad = NoiseKind::Discrete {
            values: vec![0.0, 1.0],
            probs: vec![0.5, 0.5],
        };
        assert!(bad.validate().is_err());
        let x = NoiseModel::new(kind, 1).realize(200).unwrap();
        assert!(x.iter().all(|&v| v == -1.0 || v == 2.0));
    }

    #[test]
    fn parse_noise_specs() {
        assert_eq!("gaussian:1".parse::<NoiseKind>().unwrap(), NoiseKind::Gaussian { sigma: 1.0 });
        assert_eq!("uniform:3".parse::<NoiseKind>().unwrap(), NoiseKind::Uniform { bound: 3.0 });
        assert!("gaussian:-1".parse::<NoiseKind>().is_err());
        assert!("cauchy:1".parse::<NoiseKind>().is_err());
    }

    #[test]
    fn cdfs() {
        let g = NoiseKind::Gaussian { sigma: 2.0 };
        assert!((g.cdf(0.0) - 0.5).abs() < 1e-12);
        let u = NoiseKind::Uniform { bound: 1.0 };
        assert_eq!(u.cdf(0.5), 0.75);
        assert_eq!(u.cdf(-3.0), 0.0);
    }
}

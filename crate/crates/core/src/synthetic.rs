//! Synthetic feature targets.

use std::f64::consts::TAU;

use rand::Rng as _;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Isotropic Gaussian mixture, samples clipped to `[-1, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    means: Vec<Vec<f64>>,
    weights: Vec<f64>,
    std: f64,
}

impl GaussianMixture {
    pub fn new(means: Vec<Vec<f64>>, weights: Vec<f64>, std: f64) -> Result<Self> {
        let dim = means.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
        if means.iter().any(|m| m.len() != dim) || weights.len() != means.len() {
            return Err(Error::invalid("mixture means and weights disagree in shape"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid("mixture weights must be non-negative with positive sum"));
        }
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::invalid(format!("bad component std {std}")));
        }
        Ok(GaussianMixture { means, weights, std })
    }

    /// `components` equally weighted blobs; each mean places every qubit's
    /// `(⟨X⟩, ⟨Z⟩)` pair on a circle of `radius` at a random angle. Features
    /// are laid out as all `X` values then all `Z` values.
    pub fn bloch_circle(n_qubits: usize, components: usize, radius: f64, std: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&radius) {
            return Err(Error::invalid(format!("radius {radius} outside [0, 1]")));
        }
        let mut r = rng::stream(seed, 0);
        let means = (0..components)
            .map(|_| {
                let phi: Vec<f64> = (0..n_qubits).map(|_| r.random_range(0.0..TAU)).collect();
                let mut m: Vec<f64> = phi.iter().map(|p| radius * p.sin()).collect();
                m.extend(phi.iter().map(|p| radius * p.cos()));
                m
            })
            .collect();
        Self::new(means, vec![1.0; components], std)
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// `count` samples with their component labels.
    pub fn sample(&self, count: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let mut r = rng::stream(seed, 0);
        let pick = WeightedIndex::new(&self.weights).map_err(|e| Error::Numeric(e.to_string()))?;
        let noise = Normal::new(0.0, self.std).map_err(|e| Error::Numeric(e.to_string()))?;
        let mut xs = Vec::with_capacity(count);
        let mut labels = Vec::with_capacity(count);
        for _ in 0..count {
            let c = pick.sample(&mut r);
            xs.push(self.means[c].iter().map(|m| (m + noise.sample(&mut r)).clamp(-1.0, 1.0)).collect());
            labels.push(c);
        }
        Ok((xs, labels))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_cluster_around_means() {
        let gm = GaussianMixture::bloch_circle(5, 4, 0.8, 0.05, 3).unwrap();
        assert_eq!(gm.dim(), 10);
        for m in gm.means() {
            for q in 0..5 {
                assert!((m[q].hypot(m[q + 5]) - 0.8).abs() < 1e-12);
            }
        }
        let (xs, labels) = gm.sample(4000, 1).unwrap();
        assert!(xs.iter().flatten().all(|v| v.abs() <= 1.0));
        for c in 0..4 {
            let members: Vec<&Vec<f64>> = xs.iter().zip(&labels).filter(|(_, l)| **l == c).map(|(x, _)| x).collect();
            assert!(members.len() > 800 && members.len() < 1200);
            let mean0 = members.iter().map(|x| x[0]).sum::<f64>() / members.len() as f64;
            assert!((mean0 - gm.means()[c][0]).abs() < 0.01);
        }
        assert_eq!(gm.sample(10, 1).unwrap(), gm.sample(10, 1).unwrap());
    }
}

//! Synthetic tasks with a known best single-model accuracy.
//!
//! `gen_ambiguous` draws labels independently of the inputs, so no classifier
//! can beat the largest class prior while an ensemble with one member per
//! label reaches perfect oracle accuracy. `gen_clustered_classes` places one
//! Gaussian cluster per class and pulls selected class pairs onto nearly the
//! same center, making them genuinely confusable.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::engine::Tensor;
use crate::error::{Error, Result};
use crate::rng::{self, Prng, Stream};

fn normal_vec(rng: &mut Prng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Gaussian inputs with labels drawn from `mode_priors`, independent of the inputs.
pub fn gen_ambiguous(seed: u64, n: usize, input_dim: usize, mode_priors: &[f64]) -> Result<Dataset> {
    if mode_priors.is_empty()
        || mode_priors.iter().any(|p| !p.is_finite() || *p < 0.0)
        || (mode_priors.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidConfig(format!(
            "mode priors must be non-negative and sum to 1, got {mode_priors:?}"
        )));
    }
    if n == 0 || input_dim == 0 {
        return Err(Error::InvalidConfig("n and input_dim must be positive".into()));
    }
    let mut rng = rng::stream(seed, Stream::Data);
    let labels_dist = WeightedIndex::new(mode_priors)
        .map_err(|e| Error::InvalidConfig(format!("mode priors: {e}")))?;
    let mut data = Vec::with_capacity(n * input_dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        data.extend(normal_vec(&mut rng, input_dim));
        labels.push(labels_dist.sample(&mut rng));
    }
    Dataset::new(Tensor::new(vec![n, input_dim], data)?, labels, mode_priors.len(), "synthetic")
}

/// Layout of the clustered-classes task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteredParams {
    pub input_dim: usize,
    pub class_count: usize,
    /// Per-coordinate standard deviation of each cluster.
    pub cluster_spread: f64,
    /// Class pairs pulled onto a shared midpoint.
    #[serde(default)]
    pub confusable_pairs: Vec<(usize, usize)>,
    /// Distance between the two centers of each confusable pair.
    #[serde(default)]
    pub pair_separation: f64,
    /// Per-coordinate standard deviation of the class centers.
    #[serde(default = "default_center_scale")]
    pub center_scale: f64,
}

fn default_center_scale() -> f64 {
    1.0
}

impl ClusteredParams {
    fn validate(&self) -> Result<()> {
        if self.class_count < 2 {
            return Err(Error::InvalidConfig("clustered task needs at least 2 classes".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !non_negative(self.cluster_spread) || !non_negative(self.pair_separation) || !non_negative(self.center_scale) {
            return Err(Error::InvalidConfig(
                "cluster_spread, pair_separation and center_scale must be non-negative".into(),
            ));
        }
        for &(a, b) in &self.confusable_pairs {
            if a == b || a >= self.class_count || b >= self.class_count {
                return Err(Error::InvalidConfig(format!("invalid confusable pair ({a}, {b})")));
            }
        }
        Ok(())
    }
}

/// Class centers for `seed`; independent of the number of samples drawn.
pub fn clustered_centers(seed: u64, params: &ClusteredParams) -> Result<Vec<Vec<f64>>> {
    params.validate()?;
    let mut rng = rng::stream(seed, Stream::Data);
    let d = params.input_dim;
    let mut centers: Vec<Vec<f64>> = (0..params.class_count)
        .map(|_| normal_vec(&mut rng, d).into_iter().map(|v| v * params.center_scale).collect())
        .collect();
    for &(a, b) in &params.confusable_pairs {
        let mid: Vec<f64> = centers[a].iter().zip(&centers[b]).map(|(x, y)| 0.5 * (x + y)).collect();
        let dir = normal_vec(&mut rng, d);
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let half = 0.5 * params.pair_separation / norm;
        centers[a] = mid.iter().zip(&dir).map(|(m, u)| m + half * u).collect();
        centers[b] = mid.iter().zip(&dir).map(|(m, u)| m - half * u).collect();
    }
    Ok(centers)
}

/// `n` examples, classes balanced to within one, drawn around [`clustered_centers`].
pub fn gen_clustered_classes(seed: u64, n: usize, params: &ClusteredParams) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("n must be positive".into()));
    }
    let centers = clustered_centers(seed, params)?;
    // separate stream for samples so the layout does not depend on n
    let mut rng = rng::stream(seed.wrapping_add(0x5EED), Stream::Data);
    let mut labels: Vec<usize> = (0..n).map(|i| i % params.class_count).collect();
    labels.shuffle(&mut rng);
    let mut data = Vec::with_capacity(n * params.input_dim);
    for &y in &labels {
        let noise = normal_vec(&mut rng, params.input_dim);
        data.extend(centers[y].iter().zip(noise).map(|(c, e)| c + params.cluster_spread * e));
    }
    Dataset::new(
        Tensor::new(vec![n, params.input_dim], data)?,
        labels,
        params.class_count,
        "synthetic",
    )
}

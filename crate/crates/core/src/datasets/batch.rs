use rand::seq::SliceRandom;

use super::Dataset;
use crate::engine::Tensor;
use crate::rng::{self, Stream};

/// Epoch-wise shuffled minibatch schedule.
///
/// Epoch `e` uses its own permutation of `[0, N)`, derived from `(seed, e)` and
/// generated on first use. The last batch of an epoch may be smaller than
/// `batch_size`.
#[derive(Debug, Clone)]
pub struct BatchPlan {
    seed: u64,
    batch_size: usize,
    example_count: usize,
    cached: Option<(usize, Vec<usize>)>,
}

impl BatchPlan {
    pub fn new(seed: u64, batch_size: usize, example_count: usize) -> Self {
        assert!(batch_size > 0, "batch size must be positive");
        assert!(example_count > 0, "cannot plan batches over an empty dataset");
        BatchPlan {
            seed,
            batch_size,
            example_count,
            cached: None,
        }
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.example_count.div_ceil(self.batch_size)
    }

    pub fn epoch_of(&self, iteration: usize) -> usize {
        iteration / self.batches_per_epoch()
    }

    /// The permutation used in `epoch`.
    pub fn permutation(&mut self, epoch: usize) -> &[usize] {
        if self.cached.as_ref().map(|(e, _)| *e) != Some(epoch) {
            let epoch_seed = self.seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            let mut rng = rng::stream(epoch_seed, Stream::Shuffle);
            let mut perm: Vec<usize> = (0..self.example_count).collect();
            perm.shuffle(&mut rng);
            self.cached = Some((epoch, perm));
        }
        &self.cached.as_ref().expect("cached").1
    }

    /// Example indices of the batch drawn at `iteration`.
    pub fn indices(&mut self, iteration: usize) -> Vec<usize> {
        let per_epoch = self.batches_per_epoch();
        let position = iteration % per_epoch;
        let start = position * self.batch_size;
        let end = (start + self.batch_size).min(self.example_count);
        self.permutation(iteration / per_epoch)[start..end].to_vec()
    }
}

/// Inputs and labels of the batch drawn at `global_iteration`.
pub fn next_batch(plan: &mut BatchPlan, dataset: &Dataset, global_iteration: usize) -> (Tensor, Vec<usize>) {
    let idx = plan.indices(global_iteration);
    let labels = idx.iter().map(|&i| dataset.labels()[i]).collect();
    (dataset.inputs().select_rows(&idx), labels)
}

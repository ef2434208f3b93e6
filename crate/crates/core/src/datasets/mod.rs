//! Labeled datasets: synthetic generators, IDX and CSV ingestion, batch plans.

mod batch;
mod csv_io;
mod idx;
mod synthetic;

use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use batch::{next_batch, BatchPlan};
pub use csv_io::{load_csv, write_csv};
pub use idx::{load_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use synthetic::{clustered_centers, gen_ambiguous, gen_clustered_classes, ClusteredParams};

use crate::engine::Tensor;
use crate::error::{Error, Result};

/// Per-feature statistics computed on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
}

impl FeatureStats {
    pub fn from_inputs(inputs: &Tensor) -> Self {
        let d = inputs.cols();
        let mut mean = vec![0.0; d];
        for i in 0..inputs.rows() {
            for (m, &x) in mean.iter_mut().zip(inputs.row(i)) {
                *m += x;
            }
        }
        let n = inputs.rows() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        FeatureStats { mean }
    }

    pub fn subtract_from(&self, inputs: &mut Tensor) {
        let d = self.mean.len();
        for row in inputs.data_mut().chunks_mut(d) {
            for (x, m) in row.iter_mut().zip(&self.mean) {
                *x -= m;
            }
        }
    }
}

/// `N` examples of width `D` with class labels in `[0, C)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Tensor,
    labels: Vec<usize>,
    class_count: usize,
    split_tag: String,
    stats: Option<FeatureStats>,
}

impl Dataset {
    pub fn new(inputs: Tensor, labels: Vec<usize>, class_count: usize, split_tag: impl Into<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset("no examples".into()));
        }
        if inputs.shape().len() != 2 || inputs.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "inputs {:?} for {} labels",
                inputs.shape(),
                labels.len()
            )));
        }
        if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: class_count,
                index,
            });
        }
        if !inputs.all_finite() {
            return Err(Error::NonFinite("dataset inputs".into()));
        }
        Ok(Dataset {
            inputs,
            labels,
            class_count,
            split_tag: split_tag.into(),
            stats: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn inputs(&self) -> &Tensor {
        &self.inputs
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn split_tag(&self) -> &str {
        &self.split_tag
    }

    pub fn stats(&self) -> Option<&FeatureStats> {
        self.stats.as_ref()
    }

    pub fn with_split_tag(mut self, tag: impl Into<String>) -> Self {
        self.split_tag = tag.into();
        self
    }

    pub fn with_stats(mut self, stats: FeatureStats) -> Self {
        self.stats = Some(stats);
        self
    }

    /// Widens the label space, e.g. to align a test split with its training split.
    pub fn with_class_count(mut self, class_count: usize) -> Result<Self> {
        if class_count < self.class_count {
            return Err(Error::InvalidConfig(format!(
                "cannot shrink class count from {} to {class_count}",
                self.class_count
            )));
        }
        self.class_count = class_count;
        Ok(self)
    }

    /// Examples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let mut d = Dataset::new(
            self.inputs.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.class_count,
            self.split_tag.clone(),
        )?;
        d.stats = self.stats.clone();
        Ok(d)
    }

    /// A contiguous block of examples.
    pub fn slice(&self, range: Range<usize>) -> Result<Dataset> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::InvalidConfig(format!(
                "range {range:?} invalid for {} examples",
                self.len()
            )));
        }
        self.select(&range.collect::<Vec<_>>())
    }

    /// Number of examples of each class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

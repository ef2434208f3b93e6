use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datasets::{gen_ambiguous, gen_clustered_classes, load_csv, load_idx, ClusteredParams, Dataset};
use crate::error::{Error, Result};
use crate::trainers::{Method, TrainConfig};

/// Where the examples of an experiment come from.
///
/// Synthetic generators draw a single pool from the replicate seed and cut it
/// into train, probe and test blocks. File sources hold out the last
/// `probe_size` training rows as the probe set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetDescriptor {
    Ambiguous {
        n_train: usize,
        n_test: usize,
        input_dim: usize,
        mode_priors: Vec<f64>,
    },
    Clustered {
        n_train: usize,
        n_test: usize,
        #[serde(flatten)]
        params: ClusteredParams,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    Csv {
        train: PathBuf,
        test: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
    },
}

fn default_label_column() -> String {
    "label".into()
}

/// Train / probe / test triple materialized from a descriptor.
#[derive(Debug, Clone)]
pub struct DataSplits {
    pub train: Dataset,
    pub probe: Dataset,
    pub test: Dataset,
}

fn split_pool(pool: Dataset, n_train: usize, probe_size: usize, n_test: usize) -> Result<DataSplits> {
    let a = n_train;
    let b = a + probe_size;
    let c = b + n_test;
    Ok(DataSplits {
        train: pool.slice(0..a)?.with_split_tag("train"),
        probe: pool.slice(a..b)?.with_split_tag("probe"),
        test: pool.slice(b..c)?.with_split_tag("test"),
    })
}

fn hold_out_probe(train: Dataset, probe_size: usize) -> Result<(Dataset, Dataset)> {
    let n = train.len();
    if probe_size >= n {
        return Err(Error::InvalidConfig(format!(
            "probe size {probe_size} leaves no training data out of {n} rows"
        )));
    }
    Ok((
        train.slice(0..n - probe_size)?.with_split_tag("train"),
        train.slice(n - probe_size..n)?.with_split_tag("probe"),
    ))
}

impl DatasetDescriptor {
    /// Builds the splits for one replicate seed. File paths are resolved against `base`.
    pub fn materialize(&self, seed: u64, probe_size: usize, base: &Path) -> Result<DataSplits> {
        if probe_size == 0 {
            return Err(Error::InvalidConfig("probe_size must be positive".into()));
        }
        let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
        match self {
            DatasetDescriptor::Ambiguous { n_train, n_test, input_dim, mode_priors } => {
                let pool = gen_ambiguous(seed, n_train + probe_size + n_test, *input_dim, mode_priors)?;
                split_pool(pool, *n_train, probe_size, *n_test)
            }
            DatasetDescriptor::Clustered { n_train, n_test, params } => {
                let pool = gen_clustered_classes(seed, n_train + probe_size + n_test, params)?;
                split_pool(pool, *n_train, probe_size, *n_test)
            }
            DatasetDescriptor::Idx { train_images, train_labels, test_images, test_labels } => {
                let train = load_idx(&resolve(train_images), &resolve(train_labels), None)?;
                let stats = train.stats().cloned();
                let test = load_idx(&resolve(test_images), &resolve(test_labels), stats.as_ref())?;
                align(train, test, probe_size)
            }
            DatasetDescriptor::Csv { train, test, label_column } => {
                let train = load_csv(&resolve(train), label_column)?;
                let test = load_csv(&resolve(test), label_column)?;
                if train.input_dim() != test.input_dim() {
                    return Err(Error::Shape(format!(
                        "train CSV has {} features, test CSV {}",
                        train.input_dim(),
                        test.input_dim()
                    )));
                }
                align(train, test, probe_size)
            }
        }
    }

    /// True for generator-backed descriptors.
    pub fn is_synthetic(&self) -> bool {
        matches!(self, DatasetDescriptor::Ambiguous { .. } | DatasetDescriptor::Clustered { .. })
    }
}

fn align(train: Dataset, test: Dataset, probe_size: usize) -> Result<DataSplits> {
    let classes = train.class_count().max(test.class_count());
    let (train, probe) = hold_out_probe(train.with_class_count(classes)?, probe_size)?;
    Ok(DataSplits {
        train,
        probe,
        test: test.with_class_count(classes)?.with_split_tag("test"),
    })
}

/// A sweep: the product of methods × ensemble sizes × k values × seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetDescriptor,
    pub methods: Vec<Method>,
    pub ensemble_sizes: Vec<usize>,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    pub replicate_seeds: Vec<u64>,
    /// Base recipe; method, member count, k and seed are set per cell.
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_probe_size")]
    pub probe_size: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 1 runs cells and members on a single thread, 0 uses every core.
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

fn default_k_values() -> Vec<usize> {
    vec![1]
}

fn default_probe_size() -> usize {
    1000
}

fn default_jobs() -> usize {
    1
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let nonempty = |name: &str, empty: bool| {
            if empty {
                Err(Error::InvalidConfig(format!("{name} must not be empty")))
            } else {
                Ok(())
            }
        };
        nonempty("methods", self.methods.is_empty())?;
        nonempty("ensemble_sizes", self.ensemble_sizes.is_empty())?;
        nonempty("k_values", self.k_values.is_empty())?;
        nonempty("replicate_seeds", self.replicate_seeds.is_empty())?;
        let min_m = *self.ensemble_sizes.iter().min().expect("nonempty");
        if let Some(&k) = self.k_values.iter().find(|&&k| k == 0 || k > min_m) {
            return Err(Error::InvalidConfig(format!(
                "k={k} must satisfy 1 <= k <= every ensemble size (smallest is {min_m})"
            )));
        }
        if self.probe_size == 0 {
            return Err(Error::InvalidConfig("probe_size must be positive".into()));
        }
        for cell in self.cells() {
            self.cell_config(&cell).validate()?;
        }
        Ok(())
    }

    /// Every cell of the sweep, in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &method in &self.methods {
            for &members in &self.ensemble_sizes {
                for &k in &self.k_values {
                    for &seed in &self.replicate_seeds {
                        cells.push(Cell { method, members, k, seed });
                    }
                }
            }
        }
        cells
    }

    pub fn cell_config(&self, cell: &Cell) -> TrainConfig {
        TrainConfig {
            method: cell.method,
            member_count: cell.members,
            winners_per_example: cell.k,
            seed: cell.seed,
            ..self.train.clone()
        }
    }
}

/// One training run. Same schema as [`ExperimentConfig`] without the sweep axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dataset: Option<DatasetDescriptor>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_probe_size")]
    pub probe_size: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            train: TrainConfig::default(),
            probe_size: default_probe_size(),
            output_dir: None,
            jobs: default_jobs(),
        }
    }
}

impl RunConfig {
    /// Reads a run config, or a sweep config whose first cell becomes the run.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.get("methods").is_some() || value.get("ensemble_sizes").is_some() {
            let sweep: ExperimentConfig = serde_json::from_value(value)?;
            sweep.validate()?;
            return Ok(RunConfig::from(&sweep));
        }
        Ok(serde_json::from_value(value)?)
    }
}

impl From<&ExperimentConfig> for RunConfig {
    fn from(sweep: &ExperimentConfig) -> Self {
        let train = match sweep.cells().first() {
            Some(cell) => sweep.cell_config(cell),
            None => sweep.train.clone(),
        };
        RunConfig {
            dataset: Some(sweep.dataset.clone()),
            train,
            probe_size: sweep.probe_size,
            output_dir: sweep.output_dir.clone(),
            jobs: sweep.jobs,
        }
    }
}

/// Coordinates of one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub members: usize,
    pub k: usize,
    pub seed: u64,
}

impl Cell {
    pub fn id(&self) -> String {
        format!("{}_m{}_k{}_s{}", self.method, self.members, self.k, self.seed)
    }
}

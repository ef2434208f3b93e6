#![allow(dead_code)]

use oens::datasets::{next_batch, BatchPlan, ClusteredParams, Dataset};
use oens::engine::{backward, forward, init_params, sgd_step, NetworkSpec, OptimizerConfig, ParameterSet, Reduction};
use oens::harness::DatasetDescriptor;
use oens::trainers::TrainConfig;

pub const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

/// Ten classes, three confusable pairs.
pub fn clustered_task() -> DatasetDescriptor {
    DatasetDescriptor::Clustered {
        n_train: 4000,
        n_test: 1000,
        params: ClusteredParams {
            input_dim: 16,
            class_count: 10,
            cluster_spread: 0.5,
            confusable_pairs: vec![(0, 1), (2, 3), (4, 5)],
            pair_separation: 0.3,
            center_scale: 1.0,
        },
    }
}

pub fn desk_optimizer() -> OptimizerConfig {
    OptimizerConfig {
        learning_rate: 0.05,
        momentum: 0.9,
        weight_decay: 1e-4,
        lr_schedule: vec![],
    }
}

pub fn desk_train_config(total_iterations: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 64,
        total_iterations,
        optimizer: desk_optimizer(),
        hidden_layers: vec![32],
        ..TrainConfig::default()
    }
}

/// Plain single-network SGD written directly against the engine.
pub fn reference_sgd(config: &TrainConfig, train: &Dataset, init_seed: u64) -> ParameterSet {
    let spec = NetworkSpec::mlp(train.input_dim(), &config.hidden_layers, train.class_count()).unwrap();
    let mut params = init_params(&spec, init_seed);
    let mut plan = BatchPlan::new(config.seed, config.batch_size, train.len());
    for t in 0..config.total_iterations {
        let (inputs, labels) = next_batch(&mut plan, train, t);
        let (_, trace) = forward(&spec, &params, &inputs).unwrap();
        let ones = vec![1.0; labels.len()];
        let grads = backward(&spec, &params, &trace, &labels, &ones, Reduction::Mean).unwrap();
        sgd_step(&mut params, &grads, &config.optimizer, t).unwrap();
    }
    params
}

pub fn bit_identical(a: &ParameterSet, b: &ParameterSet) -> bool {
    a.tensors().len() == b.tensors().len()
        && a.tensors().iter().zip(b.tensors()).all(|(x, y)| x.bit_eq(y))
        && a.momentum().iter().zip(b.momentum()).all(|(x, y)| x.bit_eq(y))
}

pub fn idx_bytes(magic: u32, dims: &[u32], payload: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for d in dims {
        out.extend(d.to_be_bytes());
    }
    out.extend_from_slice(payload);
    out
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    sum / n as f64
}

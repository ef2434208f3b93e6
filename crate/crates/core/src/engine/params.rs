use std::sync::atomic::{AtomicU64, Ordering};

use rand::distr::{Distribution, Uniform};

use super::network::NetworkSpec;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

static NEXT_INSTANCE: AtomicU64 = AtomicU64::new(1);

fn fresh_instance() -> u64 {
    NEXT_INSTANCE.fetch_add(1, Ordering::Relaxed)
}

/// Trainable weights and biases of one learner plus their momentum buffers.
///
/// Tensors are stored in layer order as `affine{j}.weight` (`[in, out]`) then
/// `affine{j}.bias` (`[out]`). Every in-place update bumps a generation
/// counter that [`ForwardTrace`](super::ForwardTrace) uses to reject stale
/// backward passes.
#[derive(Debug)]
pub struct ParameterSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    momentum: Vec<Tensor>,
    instance: u64,
    generation: u64,
}

impl Clone for ParameterSet {
    fn clone(&self) -> Self {
        ParameterSet {
            names: self.names.clone(),
            tensors: self.tensors.clone(),
            momentum: self.momentum.clone(),
            instance: fresh_instance(),
            generation: 0,
        }
    }
}

impl PartialEq for ParameterSet {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.tensors.len() == other.tensors.len()
            && self.tensors.iter().zip(&other.tensors).all(|(a, b)| a.bit_eq(b))
            && self.momentum.iter().zip(&other.momentum).all(|(a, b)| a.bit_eq(b))
    }
}

pub(crate) fn tensor_names(spec: &NetworkSpec) -> Vec<String> {
    spec.affine_dims()
        .enumerate()
        .flat_map(|(j, _)| [format!("affine{j}.weight"), format!("affine{j}.bias")])
        .collect()
}

pub(crate) fn tensor_shapes(spec: &NetworkSpec) -> Vec<Vec<usize>> {
    spec.affine_dims()
        .flat_map(|(i, o)| [vec![i, o], vec![o]])
        .collect()
}

/// Glorot-uniform weights, zero biases, zero momentum.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> ParameterSet {
    let mut rng = rng::stream(seed, Stream::Init);
    let mut tensors = Vec::new();
    for (in_dim, out_dim) in spec.affine_dims() {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        let weights = (0..in_dim * out_dim).map(|_| dist.sample(&mut rng)).collect();
        tensors.push(Tensor::new(vec![in_dim, out_dim], weights).expect("shape"));
        tensors.push(Tensor::zeros(vec![out_dim]));
    }
    ParameterSet::from_parts(tensor_names(spec), tensors)
}

impl ParameterSet {
    fn from_parts(names: Vec<String>, tensors: Vec<Tensor>) -> Self {
        let momentum = tensors.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect();
        ParameterSet {
            names,
            tensors,
            momentum,
            instance: fresh_instance(),
            generation: 0,
        }
    }

    /// Wraps explicit tensors for `spec`, checking names and shapes. Momentum
    /// buffers start at zero.
    pub fn from_tensors(spec: &NetworkSpec, tensors: Vec<Tensor>) -> Result<Self> {
        let shapes = tensor_shapes(spec);
        if shapes.len() != tensors.len() {
            return Err(Error::Shape(format!(
                "spec needs {} tensors, got {}",
                shapes.len(),
                tensors.len()
            )));
        }
        for (i, (want, t)) in shapes.iter().zip(&tensors).enumerate() {
            if want.as_slice() != t.shape() {
                return Err(Error::Shape(format!(
                    "tensor {i} should have shape {want:?}, got {:?}",
                    t.shape()
                )));
            }
        }
        Ok(Self::from_parts(tensor_names(spec), tensors))
    }

    /// True if the tensors have exactly the shapes implied by `spec`.
    pub fn matches(&self, spec: &NetworkSpec) -> bool {
        let shapes = tensor_shapes(spec);
        shapes.len() == self.tensors.len()
            && shapes.iter().zip(&self.tensors).all(|(s, t)| s.as_slice() == t.shape())
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn momentum(&self) -> &[Tensor] {
        &self.momentum
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    /// Mutable access to one tensor; counts as a parameter update.
    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let i = self.names.iter().position(|n| n == name)?;
        self.generation += 1;
        Some(&mut self.tensors[i])
    }

    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub(crate) fn stamp(&self) -> (u64, u64) {
        (self.instance, self.generation)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [Tensor], &mut [Tensor]) {
        self.generation += 1;
        (&mut self.tensors, &mut self.momentum)
    }

    /// Drops optimizer state, e.g. when fine-tuning from a checkpoint.
    pub fn reset_momentum(&mut self) {
        for m in &mut self.momentum {
            m.data_mut().fill(0.0);
        }
    }
}

/// Gradient buffers aligned with a [`ParameterSet`]'s tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(params: &ParameterSet) -> Self {
        Gradients {
            tensors: params
                .tensors()
                .iter()
                .map(|t| Tensor::zeros(t.shape().to_vec()))
                .collect(),
        }
    }

    pub(crate) fn from_tensors(tensors: Vec<Tensor>) -> Self {
        Gradients { tensors }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn is_all_zero(&self) -> bool {
        self.tensors.iter().all(|t| t.data().iter().all(|&v| v == 0.0))
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::all_finite)
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Gradients) -> f64 {
        self.pairs(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Largest elementwise `|a - b| / max(|a|, |b|, floor)`.
    pub fn max_relative_error(&self, other: &Gradients, floor: f64) -> f64 {
        self.pairs(other)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(floor))
            .fold(0.0, f64::max)
    }

    fn pairs<'a>(&'a self, other: &'a Gradients) -> impl Iterator<Item = (f64, f64)> + 'a {
        assert_eq!(self.tensors.len(), other.tensors.len(), "gradient layouts differ");
        self.tensors
            .iter()
            .zip(&other.tensors)
            .flat_map(|(a, b)| a.data().iter().copied().zip(b.data().iter().copied()))
    }
}

//! Central-difference gradient oracle.
//!
//! Shares only the forward pass and loss with the analytic path; it never
//! calls [`backward`](super::backward).

use super::network::NetworkSpec;
use super::ops::{forward, loss_softmax_xent, Reduction};
use super::params::{Gradients, ParameterSet};
use super::tensor::Tensor;
use crate::error::Result;

pub const DEFAULT_EPSILON: f64 = 1e-5;

fn objective(
    spec: &NetworkSpec,
    params: &ParameterSet,
    inputs: &Tensor,
    labels: &[usize],
    weights: &[f64],
    reduction: Reduction,
) -> Result<f64> {
    let (logits, _) = forward(spec, params, inputs)?;
    let losses = loss_softmax_xent(&logits, labels)?;
    let total: f64 = losses.iter().zip(weights).map(|(l, w)| l * w).sum();
    Ok(match reduction {
        Reduction::Mean => {
            let norm: f64 = weights.iter().sum();
            if norm > 0.0 {
                total / norm
            } else {
                0.0
            }
        }
        Reduction::Sum => total,
    })
}

/// `(ℓ(θ+εe) − ℓ(θ−εe)) / 2ε` of the mean batch loss for every scalar parameter.
pub fn finite_difference_grad(
    spec: &NetworkSpec,
    params: &ParameterSet,
    inputs: &Tensor,
    labels: &[usize],
    epsilon: f64,
) -> Result<Gradients> {
    let weights = vec![1.0; inputs.rows()];
    finite_difference_grad_weighted(spec, params, inputs, labels, &weights, Reduction::Mean, epsilon)
}

/// Finite differences of the weighted reduced loss used by [`backward`](super::backward).
pub fn finite_difference_grad_weighted(
    spec: &NetworkSpec,
    params: &ParameterSet,
    inputs: &Tensor,
    labels: &[usize],
    weights: &[f64],
    reduction: Reduction,
    epsilon: f64,
) -> Result<Gradients> {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(params.tensors().len());
    for (name, tensor) in params.names().iter().zip(params.tensors()) {
        let mut grad = Tensor::zeros(tensor.shape().to_vec());
        for idx in 0..tensor.len() {
            let original = tensor.data()[idx];
            probe.get_mut(name).expect("name").data_mut()[idx] = original + epsilon;
            let plus = objective(spec, &probe, inputs, labels, weights, reduction)?;
            probe.get_mut(name).expect("name").data_mut()[idx] = original - epsilon;
            let minus = objective(spec, &probe, inputs, labels, weights, reduction)?;
            probe.get_mut(name).expect("name").data_mut()[idx] = original;
            grad.data_mut()[idx] = (plus - minus) / (2.0 * epsilon);
        }
        out.push(grad);
    }
    Ok(Gradients::from_tensors(out))
}

/// Relative errors below this magnitude are measured against it instead.
pub const RELATIVE_FLOOR: f64 = 1e-6;
/// Inputs whose smallest |pre-activation| falls below this are redrawn.
pub const KINK_MARGIN: f64 = 1e-3;

/// Outcome of [`random_gradcheck`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GradcheckSummary {
    pub trials: usize,
    pub max_relative_error: f64,
    pub worst_trial: usize,
    pub max_abs_error: f64,
    pub scalars_checked: usize,
}

/// Compares [`backward`](super::backward) with central differences on `trials`
/// random networks of at most three affine layers and 32 units, with random
/// batches, labels and 0/1 example masks.
pub fn random_gradcheck(trials: usize, seed: u64) -> Result<GradcheckSummary> {
    use crate::rng::{stream, Stream};
    use rand::Rng;
    use rand_distr::StandardNormal;

    let mut rng = stream(seed, Stream::Trial);
    let mut summary = GradcheckSummary {
        trials,
        max_relative_error: 0.0,
        worst_trial: 0,
        max_abs_error: 0.0,
        scalars_checked: 0,
    };
    for trial in 0..trials {
        let depth = rng.random_range(0..=2usize);
        let input_dim = rng.random_range(1..=32usize);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(1..=32usize)).collect();
        let classes = rng.random_range(2..=10usize);
        let spec = NetworkSpec::mlp(input_dim, &hidden, classes)?;
        let params = super::params::init_params(&spec, rng.random());
        let batch = rng.random_range(1..=8usize);
        let (inputs, trace) = loop {
            let data: Vec<f64> = (0..batch * input_dim).map(|_| rng.sample(StandardNormal)).collect();
            let inputs = Tensor::new(vec![batch, input_dim], data)?;
            let (_, trace) = forward(&spec, &params, &inputs)?;
            if trace.relu_margin(&spec) >= KINK_MARGIN {
                break (inputs, trace);
            }
        };
        let labels: Vec<usize> = (0..batch).map(|_| rng.random_range(0..classes)).collect();
        let mut weights: Vec<f64> = (0..batch).map(|_| f64::from(rng.random_bool(0.7) as u8)).collect();
        weights[0] = 1.0;
        let reduction = if rng.random_bool(0.5) { Reduction::Mean } else { Reduction::Sum };
        let analytic = super::ops::backward(&spec, &params, &trace, &labels, &weights, reduction)?;
        let numeric = finite_difference_grad_weighted(
            &spec, &params, &inputs, &labels, &weights, reduction, DEFAULT_EPSILON,
        )?;
        let rel = analytic.max_relative_error(&numeric, RELATIVE_FLOOR);
        if rel > summary.max_relative_error || trial == 0 {
            summary.max_relative_error = rel;
            summary.worst_trial = trial;
        }
        summary.max_abs_error = summary.max_abs_error.max(analytic.max_abs_diff(&numeric));
        summary.scalars_checked += params.scalar_count();
    }
    Ok(summary)
}

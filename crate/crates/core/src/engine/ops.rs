//! Forward pass, softmax cross-entropy, and the weighted backward pass.

use serde::{Deserialize, Serialize};

use super::network::{Layer, NetworkSpec};
use super::params::{Gradients, ParameterSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// How per-example losses are combined before differentiation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// `Σ w_i ℓ_i / Σ w_i`
    #[default]
    Mean,
    /// `Σ w_i ℓ_i`
    Sum,
}

/// Activations cached by [`forward`] for one `(ParameterSet, batch)` pair.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    batch_size: usize,
    /// Input to each layer, index-aligned with `spec.layers()`.
    layer_inputs: Vec<Tensor>,
    logits: Tensor,
    stamp: (u64, u64),
}

impl ForwardTrace {
    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn logits(&self) -> &Tensor {
        &self.logits
    }

    /// Smallest `|z|` over all ReLU inputs; how close the batch sits to a kink.
    pub fn relu_margin(&self, spec: &NetworkSpec) -> f64 {
        spec.layers()
            .iter()
            .zip(&self.layer_inputs)
            .filter(|(l, _)| matches!(l, Layer::Relu))
            .flat_map(|(_, x)| x.data().iter().map(|v| v.abs()))
            .fold(f64::INFINITY, f64::min)
    }
}

// out[n×o] = x[n×i] · w[i×o] + b[o]
fn affine(x: &[f64], n: usize, w: &[f64], b: &[f64], in_dim: usize, out_dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * out_dim);
    for r in 0..n {
        out.extend_from_slice(b);
        let row = &mut out[r * out_dim..(r + 1) * out_dim];
        let xr = &x[r * in_dim..(r + 1) * in_dim];
        for (k, &xv) in xr.iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let wr = &w[k * out_dim..(k + 1) * out_dim];
            for (o, &wv) in row.iter_mut().zip(wr) {
                *o += xv * wv;
            }
        }
    }
    out
}

pub fn forward(
    spec: &NetworkSpec,
    params: &ParameterSet,
    inputs: &Tensor,
) -> Result<(Tensor, ForwardTrace)> {
    if inputs.shape().len() != 2 || inputs.cols() != spec.input_dim() {
        return Err(Error::Shape(format!(
            "inputs {:?} do not match network input dimension {}",
            inputs.shape(),
            spec.input_dim()
        )));
    }
    if !params.matches(spec) {
        return Err(Error::Shape("parameters do not match network spec".into()));
    }
    if !inputs.all_finite() {
        return Err(Error::NonFinite("forward inputs".into()));
    }
    let n = inputs.rows();
    let tensors = params.tensors();
    let mut layer_inputs = Vec::with_capacity(spec.layers().len());
    let mut current = inputs.clone();
    let mut affine_index = 0;
    for layer in spec.layers() {
        let next = match *layer {
            Layer::Affine { in_dim, out_dim } => {
                let w = tensors[2 * affine_index].data();
                let b = tensors[2 * affine_index + 1].data();
                affine_index += 1;
                let out = affine(current.data(), n, w, b, in_dim, out_dim);
                Tensor::new(vec![n, out_dim], out)?
            }
            Layer::Relu => {
                let mut t = current.clone();
                t.data_mut().iter_mut().for_each(|v| *v = v.max(0.0));
                t
            }
            Layer::SoftmaxOutput { .. } => current.clone(),
        };
        layer_inputs.push(std::mem::replace(&mut current, next));
    }
    if !current.all_finite() {
        return Err(Error::NonFinite("forward output".into()));
    }
    let trace = ForwardTrace {
        batch_size: n,
        layer_inputs,
        logits: current.clone(),
        stamp: params.stamp(),
    };
    Ok((current, trace))
}

fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::Shape(format!(
            "{} labels for {rows} examples",
            labels.len()
        )));
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(Error::LabelOutOfRange {
            label,
            classes,
            index,
        });
    }
    Ok(())
}

/// Row-wise softmax with max subtraction.
pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Per-example `-log softmax(logits_i)[label_i]`.
pub fn loss_softmax_xent(logits: &Tensor, labels: &[usize]) -> Result<Vec<f64>> {
    let classes = logits.cols();
    check_labels(labels, logits.rows(), classes)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let z = logits.row(i);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_total = z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
            // clamp the rounding residue of a saturated correct class
            (log_total - (z[y] - max)).max(0.0)
        })
        .collect())
}

/// Gradient of the weighted reduced loss with respect to every parameter.
///
/// `example_weights` holds one non-negative weight per batch row; a 0/1 mask
/// routes each example's gradient only to the learners that won it. Rows with
/// weight zero are never touched, so they contribute exactly nothing, and an
/// all-zero weight vector yields all-zero gradients.
pub fn backward(
    spec: &NetworkSpec,
    params: &ParameterSet,
    trace: &ForwardTrace,
    labels: &[usize],
    example_weights: &[f64],
    reduction: Reduction,
) -> Result<Gradients> {
    if trace.stamp != params.stamp() {
        return Err(Error::StaleTrace);
    }
    let n = trace.batch_size;
    check_labels(labels, n, spec.class_count())?;
    if example_weights.len() != n {
        return Err(Error::Shape(format!(
            "{} example weights for a batch of {n}",
            example_weights.len()
        )));
    }
    if example_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidConfig("example weights must be finite and non-negative".into()));
    }
    let mut grads = Gradients::zeros_like(params);
    let selected: Vec<usize> = (0..n).filter(|&i| example_weights[i] > 0.0).collect();
    if selected.is_empty() {
        return Ok(grads);
    }
    let total_weight: f64 = selected.iter().map(|&i| example_weights[i]).sum();
    let scale = match reduction {
        Reduction::Mean => 1.0 / total_weight,
        Reduction::Sum => 1.0,
    };

    let classes = spec.class_count();
    let rows = selected.len();
    let mut upstream = Vec::with_capacity(rows * classes);
    for &i in &selected {
        let mut p = softmax_row(trace.logits.row(i));
        p[labels[i]] -= 1.0;
        let w = example_weights[i] * scale;
        upstream.extend(p.into_iter().map(|v| v * w));
    }

    let tensors = params.tensors();
    let mut affine_index = spec.affine_dims().count();
    for (j, layer) in spec.layers().iter().enumerate().rev() {
        match *layer {
            Layer::SoftmaxOutput { .. } => {}
            Layer::Relu => {
                let x = &trace.layer_inputs[j];
                let width = x.cols();
                for (r, &i) in selected.iter().enumerate() {
                    let xr = x.row(i);
                    for (g, &xv) in upstream[r * width..(r + 1) * width].iter_mut().zip(xr) {
                        if xv <= 0.0 {
                            *g = 0.0;
                        }
                    }
                }
            }
            Layer::Affine { in_dim, out_dim } => {
                affine_index -= 1;
                let x = &trace.layer_inputs[j];
                let gt = grads.tensors_mut();
                {
                    let gw = gt[2 * affine_index].data_mut();
                    for (r, &i) in selected.iter().enumerate() {
                        let xr = x.row(i);
                        let ur = &upstream[r * out_dim..(r + 1) * out_dim];
                        for (k, &xv) in xr.iter().enumerate() {
                            if xv == 0.0 {
                                continue;
                            }
                            for (g, &u) in gw[k * out_dim..(k + 1) * out_dim].iter_mut().zip(ur) {
                                *g += xv * u;
                            }
                        }
                    }
                }
                {
                    let gb = gt[2 * affine_index + 1].data_mut();
                    for r in 0..rows {
                        for (g, &u) in gb.iter_mut().zip(&upstream[r * out_dim..(r + 1) * out_dim]) {
                            *g += u;
                        }
                    }
                }
                if affine_index > 0 {
                    let w = tensors[2 * affine_index].data();
                    let mut down = vec![0.0; rows * in_dim];
                    for r in 0..rows {
                        let ur = &upstream[r * out_dim..(r + 1) * out_dim];
                        for (k, d) in down[r * in_dim..(r + 1) * in_dim].iter_mut().enumerate() {
                            *d = w[k * out_dim..(k + 1) * out_dim]
                                .iter()
                                .zip(ur)
                                .map(|(a, b)| a * b)
                                .sum();
                        }
                    }
                    upstream = down;
                } else {
                    break;
                }
            }
        }
    }
    if !grads.all_finite() {
        return Err(Error::NonFinite("gradients".into()));
    }
    Ok(grads)
}

/// Index of the largest logit in each row (lowest index on ties).
pub fn argmax_rows(logits: &Tensor) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::init_params;

    fn identity_net() -> (NetworkSpec, ParameterSet) {
        let spec = NetworkSpec::mlp(2, &[], 2).unwrap();
        let w = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let params = ParameterSet::from_tensors(&spec, vec![w, Tensor::zeros(vec![2])]).unwrap();
        (spec, params)
    }

    #[test]
    fn identity_affine_passes_inputs_through() {
        let (spec, params) = identity_net();
        let x = Tensor::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let (logits, _) = forward(&spec, &params, &x).unwrap();
        assert_eq!(logits.data(), &[3.0, 4.0]);
    }

    #[test]
    fn zero_network_gives_zero_logits() {
        let spec = NetworkSpec::mlp(3, &[4], 5).unwrap();
        let shapes: Vec<Tensor> = init_params(&spec, 0)
            .tensors()
            .iter()
            .map(|t| Tensor::zeros(t.shape().to_vec()))
            .collect();
        let params = ParameterSet::from_tensors(&spec, shapes).unwrap();
        let x = Tensor::from_rows(&[vec![1.0, -2.0, 3.0], vec![0.5, 0.5, 0.5]]).unwrap();
        let (logits, _) = forward(&spec, &params, &x).unwrap();
        assert_eq!(logits.shape(), &[2, 5]);
        assert!(logits.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_shape_contract() {
        let spec = NetworkSpec::mlp(3, &[7], 4).unwrap();
        let params = init_params(&spec, 2);
        let x = Tensor::zeros(vec![5, 3]);
        assert_eq!(forward(&spec, &params, &x).unwrap().0.shape(), &[5, 4]);
        assert!(matches!(
            forward(&spec, &params, &Tensor::zeros(vec![5, 2])),
            Err(Error::Shape(_))
        ));
        let nan = Tensor::new(vec![1, 3], vec![f64::NAN, 0.0, 0.0]).unwrap();
        assert!(matches!(forward(&spec, &params, &nan), Err(Error::NonFinite(_))));
    }

    #[test]
    fn xent_reference_values() {
        let uniform = Tensor::zeros(vec![1, 10]);
        let l = loss_softmax_xent(&uniform, &[3]).unwrap();
        assert!((l[0] - 10f64.ln()).abs() < 1e-12);

        let saturated = Tensor::from_rows(&[vec![100.0, 0.0]]).unwrap();
        assert!(loss_softmax_xent(&saturated, &[0]).unwrap()[0] < 1e-9);

        let l = loss_softmax_xent(&Tensor::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap(), &[2]).unwrap();
        assert!((l[0] - 0.407_605_964_444_380_1).abs() < 1e-12);
    }

    #[test]
    fn xent_rejects_bad_labels() {
        let logits = Tensor::zeros(vec![2, 3]);
        assert!(matches!(
            loss_softmax_xent(&logits, &[0, 3]),
            Err(Error::LabelOutOfRange { label: 3, .. })
        ));
    }

    #[test]
    fn all_zero_mask_gives_zero_gradients() {
        let spec = NetworkSpec::mlp(3, &[4], 2).unwrap();
        let params = init_params(&spec, 3);
        let x = Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.0, 1.0]]).unwrap();
        let (_, trace) = forward(&spec, &params, &x).unwrap();
        let g = backward(&spec, &params, &trace, &[0, 1], &[0.0, 0.0], Reduction::Mean).unwrap();
        assert!(g.is_all_zero());
    }

    #[test]
    fn bias_gradient_at_origin_is_softmax_minus_onehot() {
        let spec = NetworkSpec::mlp(3, &[], 4).unwrap();
        let params = ParameterSet::from_tensors(
            &spec,
            vec![Tensor::zeros(vec![3, 4]), Tensor::zeros(vec![4])],
        )
        .unwrap();
        let (_, trace) = forward(&spec, &params, &Tensor::zeros(vec![1, 3])).unwrap();
        let g = backward(&spec, &params, &trace, &[2], &[1.0], Reduction::Mean).unwrap();
        assert_eq!(g.tensors()[1].data(), &[0.25, 0.25, -0.75, 0.25]);
        assert!(g.tensors()[0].data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_trace_is_rejected() {
        let spec = NetworkSpec::mlp(2, &[], 2).unwrap();
        let mut params = init_params(&spec, 1);
        let x = Tensor::zeros(vec![1, 2]);
        let (_, trace) = forward(&spec, &params, &x).unwrap();
        params.get_mut("affine0.bias").unwrap().data_mut()[0] = 1.0;
        assert!(matches!(
            backward(&spec, &params, &trace, &[0], &[1.0], Reduction::Mean),
            Err(Error::StaleTrace)
        ));
        let copy = params.clone();
        let (_, trace) = forward(&spec, &params, &x).unwrap();
        assert!(matches!(
            backward(&spec, &copy, &trace, &[0], &[1.0], Reduction::Mean),
            Err(Error::StaleTrace)
        ));
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        let t = Tensor::from_rows(&[vec![1.0, 3.0, 3.0], vec![2.0, 2.0, 0.0]]).unwrap();
        assert_eq!(argmax_rows(&t), vec![1, 0]);
    }
}

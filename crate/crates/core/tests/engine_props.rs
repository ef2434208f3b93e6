mod common;

use common::bit_identical;
use oens::engine::{
    backward, finite_difference_grad, finite_difference_grad_weighted, forward, init_params, read_checkpoint,
    sgd_step, write_checkpoint, Gradients, Layer, NetworkSpec, OptimizerConfig, ParameterSet, Reduction, Tensor,
    DEFAULT_EPSILON, KINK_MARGIN, RELATIVE_FLOOR,
};
use oens::rng::{stream, Stream};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

struct Case {
    spec: NetworkSpec,
    params: ParameterSet,
    inputs: Tensor,
    labels: Vec<usize>,
}

/// A random network and a batch that keeps every ReLU at least `margin` from its kink.
fn random_case(seed: u64, hidden: &[usize], input_dim: usize, classes: usize, batch: usize, margin: f64) -> Case {
    let spec = NetworkSpec::mlp(input_dim, hidden, classes).unwrap();
    let params = init_params(&spec, seed);
    let mut rng = stream(seed, Stream::Data);
    loop {
        let data: Vec<f64> = (0..batch * input_dim).map(|_| rng.sample(StandardNormal)).collect();
        let inputs = Tensor::new(vec![batch, input_dim], data).unwrap();
        let (_, trace) = forward(&spec, &params, &inputs).unwrap();
        if trace.relu_margin(&spec) >= margin {
            let labels = (0..batch).map(|_| rng.random_range(0..classes)).collect();
            return Case { spec, params, inputs, labels };
        }
    }
}

fn add(a: &Gradients, b: &Gradients) -> Vec<Vec<f64>> {
    a.tensors()
        .iter()
        .zip(b.tensors())
        .map(|(x, y)| x.data().iter().zip(y.data()).map(|(p, q)| p + q).collect())
        .collect()
}

fn network() -> impl Strategy<Value = (u64, Vec<usize>, usize, usize, usize)> {
    (any::<u64>(), prop::collection::vec(1usize..=32, 0..=2), 1usize..=12, 2usize..=6, 1usize..=6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backward_matches_central_differences(
        (seed, hidden, d, c, b) in network(),
        mask_bits in prop::collection::vec(any::<bool>(), 6),
        sum in any::<bool>(),
    ) {
        let case = random_case(seed, &hidden, d, c, b, KINK_MARGIN);
        let mut weights: Vec<f64> = mask_bits[..b].iter().map(|&x| f64::from(u8::from(x))).collect();
        weights[0] = 1.0;
        let reduction = if sum { Reduction::Sum } else { Reduction::Mean };
        let (_, trace) = forward(&case.spec, &case.params, &case.inputs).unwrap();
        let analytic = backward(&case.spec, &case.params, &trace, &case.labels, &weights, reduction).unwrap();
        let numeric = finite_difference_grad_weighted(
            &case.spec, &case.params, &case.inputs, &case.labels, &weights, reduction, DEFAULT_EPSILON,
        ).unwrap();
        prop_assert!(analytic.max_relative_error(&numeric, RELATIVE_FLOOR) <= 1e-4);
    }

    #[test]
    fn single_example_mask_matches_central_differences((seed, hidden, d, c, b) in network(), pick in 0usize..6) {
        let case = random_case(seed, &hidden, d, c, b, KINK_MARGIN);
        let mut weights = vec![0.0; b];
        weights[pick % b] = 1.0;
        let (_, trace) = forward(&case.spec, &case.params, &case.inputs).unwrap();
        let analytic = backward(&case.spec, &case.params, &trace, &case.labels, &weights, Reduction::Mean).unwrap();
        let one = case.inputs.select_rows(&[pick % b]);
        let numeric = finite_difference_grad(&case.spec, &case.params, &one, &case.labels[pick % b..=pick % b], DEFAULT_EPSILON).unwrap();
        prop_assert!(analytic.max_relative_error(&numeric, RELATIVE_FLOOR) <= 1e-4);
    }

    #[test]
    fn summed_gradient_is_linear_in_the_mask(
        (seed, hidden, d, c, b) in network(),
        bits in prop::collection::vec(0u8..3, 6),
    ) {
        let case = random_case(seed, &hidden, d, c, b, 0.0);
        let w1: Vec<f64> = bits[..b].iter().map(|&x| f64::from(x & 1)).collect();
        let w2: Vec<f64> = bits[..b].iter().map(|&x| f64::from(x >> 1)).collect();
        let both: Vec<f64> = w1.iter().zip(&w2).map(|(a, b)| a + b).collect();
        let (_, trace) = forward(&case.spec, &case.params, &case.inputs).unwrap();
        let g = |w: &[f64]| backward(&case.spec, &case.params, &trace, &case.labels, w, Reduction::Sum).unwrap();
        let (g1, g2, g12) = (g(&w1), g(&w2), g(&both));
        for (summed, joint) in add(&g1, &g2).iter().zip(g12.tensors()) {
            for (x, y) in summed.iter().zip(joint.data()) {
                prop_assert!((x - y).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn all_one_mask_is_the_unmasked_mean_gradient((seed, hidden, d, c, b) in network()) {
        let case = random_case(seed, &hidden, d, c, b, 0.0);
        let (_, trace) = forward(&case.spec, &case.params, &case.inputs).unwrap();
        let ones = backward(&case.spec, &case.params, &trace, &case.labels, &vec![1.0; b], Reduction::Mean).unwrap();
        let twos = backward(&case.spec, &case.params, &trace, &case.labels, &vec![2.0; b], Reduction::Mean).unwrap();
        let summed = backward(&case.spec, &case.params, &trace, &case.labels, &vec![1.0; b], Reduction::Sum).unwrap();
        prop_assert!(ones.max_abs_diff(&twos) <= 1e-12);
        for (m, s) in ones.tensors().iter().zip(summed.tensors()) {
            for (x, y) in m.data().iter().zip(s.data()) {
                prop_assert!((x * b as f64 - y).abs() <= 1e-10);
            }
        }
        let zero = backward(&case.spec, &case.params, &trace, &case.labels, &vec![0.0; b], Reduction::Mean).unwrap();
        prop_assert!(zero.is_all_zero());
    }

    #[test]
    fn difference_error_shrinks_as_epsilon_halves(seed in any::<u64>(), d in 1usize..=6, c in 2usize..=5, b in 1usize..=4) {
        let case = random_case(seed, &[], d, c, b, 0.0);
        let (_, trace) = forward(&case.spec, &case.params, &case.inputs).unwrap();
        let ones = vec![1.0; b];
        let analytic = backward(&case.spec, &case.params, &trace, &case.labels, &ones, Reduction::Mean).unwrap();
        let err = |eps| analytic.max_abs_diff(&finite_difference_grad(&case.spec, &case.params, &case.inputs, &case.labels, eps).unwrap());
        let (coarse, fine) = (err(1e-1), err(5e-2));
        prop_assume!(coarse > 1e-9);
        prop_assert!(fine < 0.5 * coarse, "error {coarse} at eps and {fine} at eps/2");
    }

    #[test]
    fn init_is_deterministic_and_bounded(seed in any::<u64>(), hidden in prop::collection::vec(1usize..=16, 0..=2), d in 1usize..=16, c in 2usize..=8) {
        let spec = NetworkSpec::mlp(d, &hidden, c).unwrap();
        let a = init_params(&spec, seed);
        prop_assert!(bit_identical(&a, &init_params(&spec, seed)));
        for (name, t) in a.names().iter().zip(a.tensors()) {
            if name.ends_with(".bias") {
                prop_assert!(t.data().iter().all(|&v| v.to_bits() == 0));
            } else {
                let bound = (6.0 / (t.shape()[0] + t.shape()[1]) as f64).sqrt();
                prop_assert!(t.data().iter().all(|v| v.abs() <= bound));
            }
        }
    }

    #[test]
    fn checkpoint_round_trips_bitwise(seed in any::<u64>(), hidden in prop::collection::vec(1usize..=16, 0..=2), members in 1usize..=4) {
        let specs: Vec<NetworkSpec> = (0..members).map(|m| NetworkSpec::mlp(3 + m, &hidden, 4).unwrap()).collect();
        let params: Vec<ParameterSet> = specs.iter().enumerate().map(|(m, s)| init_params(s, seed ^ m as u64)).collect();
        let pairs: Vec<_> = specs.iter().zip(&params).collect();
        let mut bytes = Vec::new();
        write_checkpoint(&mut bytes, &pairs).unwrap();
        let back = read_checkpoint(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.len(), members);
        for ((s, p), (s2, p2)) in back.iter().zip(specs.iter().zip(&params)) {
            prop_assert_eq!(s, s2);
            prop_assert!(p.tensors().iter().zip(p2.tensors()).all(|(a, b)| a.bit_eq(b)));
        }
    }

    #[test]
    fn zero_gradient_step_is_a_fixed_point(seed in any::<u64>(), lr in 1e-4f64..1.0, it in 0usize..10_000) {
        let spec = NetworkSpec::mlp(5, &[7], 3).unwrap();
        let mut params = init_params(&spec, seed);
        let before = params.clone();
        let opt = OptimizerConfig { learning_rate: lr, momentum: 0.9, weight_decay: 0.0, lr_schedule: vec![] };
        sgd_step(&mut params, &Gradients::zeros_like(&before), &opt, it).unwrap();
        prop_assert!(bit_identical(&params, &before));
    }
}

#[test]
fn layer_json_is_tagged() {
    let spec = NetworkSpec::mlp(2, &[3], 2).unwrap();
    let json = serde_json::to_string(&spec).unwrap();
    assert!(json.contains(r#""kind":"affine""#), "{json}");
    let back: NetworkSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, spec);
    assert!(NetworkSpec::new(vec![Layer::Relu]).is_err());
}

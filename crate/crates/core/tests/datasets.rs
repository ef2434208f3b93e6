mod common;

use common::{desk_optimizer, idx_bytes};
use oens::datasets::{
    clustered_centers, gen_ambiguous, gen_clustered_classes, load_csv, load_idx, next_batch, write_csv, BatchPlan,
    ClusteredParams, FeatureStats, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
use oens::error::Error;
use oens::trainers::{evaluate, train, Method, TrainConfig};
use proptest::prelude::*;

fn params(spread: f64, pairs: Vec<(usize, usize)>, sep: f64) -> ClusteredParams {
    ClusteredParams {
        input_dim: 8,
        class_count: 6,
        cluster_spread: spread,
        confusable_pairs: pairs,
        pair_separation: sep,
        center_scale: 1.0,
    }
}

/// Upper 0.001 quantiles of the chi-square distribution for 1..=4 degrees of freedom.
const CHI2_999: [f64; 4] = [10.828, 13.816, 16.266, 18.467];

#[test]
fn ambiguous_label_marginals_match_priors() {
    for priors in [vec![0.5, 0.5], vec![0.2, 0.3, 0.5], vec![0.1, 0.1, 0.4, 0.4]] {
        let n = 10_000;
        let ds = gen_ambiguous(77, n, 3, &priors).unwrap();
        let stat: f64 = ds
            .class_counts()
            .iter()
            .zip(&priors)
            .map(|(&obs, p)| {
                let expected = p * n as f64;
                (obs as f64 - expected).powi(2) / expected
            })
            .sum();
        assert!(stat < CHI2_999[priors.len() - 2], "chi-square {stat} for {priors:?}");
    }
}

#[test]
fn single_mode_is_unambiguous() {
    let ds = gen_ambiguous(1, 100, 2, &[1.0]).unwrap();
    assert!(ds.labels().iter().all(|&y| y == 0));
    assert!(gen_ambiguous(1, 100, 2, &[0.5, 0.4]).is_err());
}

#[test]
fn generators_are_deterministic() {
    let a = gen_ambiguous(5, 200, 4, &[0.5, 0.5]).unwrap();
    let b = gen_ambiguous(5, 200, 4, &[0.5, 0.5]).unwrap();
    assert!(a.inputs().bit_eq(b.inputs()));
    assert_eq!(a.labels(), b.labels());
    let p = params(0.5, vec![(0, 1)], 0.3);
    let a = gen_clustered_classes(5, 200, &p).unwrap();
    let b = gen_clustered_classes(5, 200, &p).unwrap();
    assert!(a.inputs().bit_eq(b.inputs()));
    assert_eq!(a.labels(), b.labels());
    let c = gen_clustered_classes(6, 200, &p).unwrap();
    assert!(!a.inputs().bit_eq(c.inputs()));
}

#[test]
fn zero_separation_pairs_share_a_center() {
    let p = params(0.5, vec![(2, 3)], 0.0);
    let centers = clustered_centers(9, &p).unwrap();
    for (a, b) in centers[2].iter().zip(&centers[3]) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!(centers[0].iter().zip(&centers[1]).any(|(a, b)| (a - b).abs() > 1e-3));
}

#[test]
fn tight_clusters_are_linearly_separable() {
    let pool = gen_clustered_classes(4, 1500, &params(0.01, vec![], 0.0)).unwrap();
    let train_set = pool.slice(0..1000).unwrap();
    let test = pool.slice(1000..1500).unwrap();
    let cfg = TrainConfig {
        method: Method::Independent,
        member_count: 1,
        hidden_layers: vec![],
        batch_size: 32,
        total_iterations: 300,
        optimizer: desk_optimizer(),
        ..TrainConfig::default()
    };
    let (e, _) = train(&cfg, &train_set, &test, None).unwrap();
    let report = evaluate(&e, &test).unwrap();
    assert!(report.oracle_accuracy >= 0.99, "{}", report.oracle_accuracy);
    assert!(report.oracle_loss < 0.1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clustered_labels_are_balanced(seed in any::<u64>(), n in 1usize..500, classes in 2usize..12) {
        let p = ClusteredParams { class_count: classes, ..params(0.5, vec![], 0.0) };
        let counts = gen_clustered_classes(seed, n, &p).unwrap().class_counts();
        let (lo, hi) = (n / classes, n.div_ceil(classes));
        prop_assert!(counts.iter().all(|&c| c >= lo && c <= hi), "{counts:?}");
    }

    #[test]
    fn each_epoch_is_a_permutation(seed in any::<u64>(), n in 1usize..300, batch in 1usize..80, epoch in 0usize..5) {
        let mut plan = BatchPlan::new(seed, batch, n);
        let per_epoch = plan.batches_per_epoch();
        let mut seen: Vec<usize> = (0..per_epoch).flat_map(|b| plan.indices(epoch * per_epoch + b)).collect();
        prop_assert_eq!(seen.len(), n);
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let mut twin = BatchPlan::new(seed, batch, n);
        for it in 0..2 * per_epoch {
            prop_assert_eq!(plan.indices(it), twin.indices(it));
        }
    }
}

#[test]
fn batch_at_least_dataset_is_one_permuted_epoch() {
    let ds = gen_ambiguous(0, 10, 2, &[0.5, 0.5]).unwrap();
    let mut plan = BatchPlan::new(3, 64, 10);
    assert_eq!(plan.batches_per_epoch(), 1);
    let (x, y) = next_batch(&mut plan, &ds, 0);
    assert_eq!(x.rows(), 10);
    let perm = plan.permutation(0).to_vec();
    assert_eq!(y, perm.iter().map(|&i| ds.labels()[i]).collect::<Vec<_>>());
    assert_ne!(plan.permutation(1).to_vec(), perm);
}

#[test]
fn idx_images_flatten_and_center() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = (dir.path().join("i"), dir.path().join("l"));
    let mut pixels = vec![0u8; 2 * 784];
    pixels[784..].fill(255);
    std::fs::write(&images, idx_bytes(IDX_IMAGES_MAGIC, &[2, 28, 28], &pixels)).unwrap();
    std::fs::write(&labels, idx_bytes(IDX_LABELS_MAGIC, &[2], &[3, 9])).unwrap();
    let ds = load_idx(&images, &labels, None).unwrap();
    assert_eq!(ds.inputs().shape(), &[2, 784]);
    assert_eq!(ds.labels(), &[3, 9]);
    assert!(ds.inputs().row(0).iter().all(|&v| (v + 0.5).abs() < 1e-12));
    let stats = FeatureStats { mean: vec![0.25; 784] };
    let test = load_idx(&images, &labels, Some(&stats)).unwrap();
    assert!(test.inputs().row(0).iter().all(|&v| (v + 0.25).abs() < 1e-12));

    std::fs::write(&labels, idx_bytes(IDX_LABELS_MAGIC, &[3], &[3, 9, 1])).unwrap();
    match load_idx(&images, &labels, None) {
        Err(Error::Format { detail, .. }) => assert!(detail.contains("3 labels for 2 images"), "{detail}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn csv_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("three.csv");
    std::fs::write(&path, "x,y,label\n0.5,1,0\n-2,3e-1,2\n4,5,1\n").unwrap();
    let ds = load_csv(&path, "label").unwrap();
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.input_dim(), 2);
    assert_eq!(ds.class_count(), 3);

    let gen = gen_clustered_classes(2, 50, &params(0.5, vec![(0, 1)], 0.3)).unwrap();
    let out = dir.path().join("gen.csv");
    write_csv(&gen, &out).unwrap();
    let back = load_csv(&out, "label").unwrap();
    assert!(back.inputs().bit_eq(gen.inputs()));
    assert_eq!(back.labels(), gen.labels());

    match load_csv(&path, "target") {
        Err(e) => assert!(e.to_string().contains("\"target\""), "{e}"),
        Ok(_) => panic!("missing label column accepted"),
    }
    std::fs::write(&path, "x,x,label\n1,2,0\n").unwrap();
    assert!(load_csv(&path, "label").is_err());
}

mod common;

use common::*;
use mvlle::data::{synth_multiview, zscore, MultiViewDataset, SynthParams};
use mvlle::eval::*;
use mvlle::graphs::*;
use mvlle::solver::*;
use mvlle::Matrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[test]
fn one_nn_matches_linear_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let refs = random_matrix(4, 50, &mut rng);
    let queries = random_matrix(4, 20, &mut rng);
    let labels: Vec<String> = (0..50).map(|i| format!("l{i}")).collect();
    let got = one_nn(&refs, &labels, &queries, Metric::L1).unwrap();
    for (q, label) in queries.column_iter().zip(&got) {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, r) in refs.column_iter().enumerate() {
            let d: f64 = (q - r).iter().map(|v| v.abs()).sum();
            if d < best.0 {
                best = (d, j);
            }
        }
        assert_eq!(label, &labels[best.1]);
    }
}

#[test]
fn f1_forms_differ_by_factor_two() {
    for (p, r) in [(0.7913, 0.6114), (0.1, 0.9), (1.0, 1.0)] {
        let rep = RetrievalReport::from_means(p, r, 0.0, 2);
        assert!(rep.f1_paper < rep.f1_standard);
        assert!((rep.f1_standard - 2.0 * rep.f1_paper).abs() < 1e-15);
    }
}

#[test]
fn perfect_rankings_give_unit_map() {
    let rankings = vec![vec![3, 1, 0], vec![0, 2, 1]];
    let relevance = vec![BTreeSet::from([1, 3]), BTreeSet::from([0])];
    let rep = retrieval_metrics(&rankings, &relevance, 2).unwrap();
    assert_eq!(rep.map, 1.0);
    assert_eq!(rep.recall, 1.0);
    assert_eq!(rep.precision, 0.75);
}

#[test]
fn retrieve_protocol_on_separated_clusters() {
    let emb = Matrix::from_row_slice(1, 6, &[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
    let labels: Vec<String> = ["a", "a", "a", "b", "b", "b"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rep = retrieve_protocol(&emb, &labels, 2, Metric::L1).unwrap();
    assert_eq!((rep.precision, rep.recall, rep.map), (1.0, 1.0, 1.0));
}

#[test]
fn baseline_lle_equals_single_view_decoupled_fit() {
    let data = synth_multiview(&SynthParams::new(40, 1, 2, 2, vec![5], 0.2, 17)).unwrap();
    let x = data.view(0).clone();
    let mut cfg = FitConfig::new(vec![3]);
    cfg.k = 6;
    cfg.lambda_c = 0.0;
    cfg.preprocess = Preprocess::None;
    let res = fit(&data, &cfg).unwrap();
    let u = baseline_lle(&x, 6, 3).unwrap();
    assert!(orthonormality_error(&u) <= 1e-10);
    assert!((projector(&u) - projector(&res.embeddings[0])).norm() <= 1e-10);
}

#[test]
fn baseline_lle_on_parabola_is_second_eigenvector() {
    let x = parabola(20);
    let u = baseline_lle(&x, 4, 1).unwrap();
    let s = lle_weights(&x, &knn(&x, 4).unwrap(), DEFAULT_EPS_REG).unwrap();
    let (_, vectors) = jacobi_eigen(&embedding_cost(&s));
    let cos = u.row(0).transpose().dot(&vectors.column(1)).abs();
    assert!((cos - 1.0).abs() < 1e-8);
}

#[test]
fn baseline_le_splits_two_clusters_by_sign() {
    let coords = [0.0, 0.1, 0.2, 0.3, 0.15, 5.0, 5.1, 5.2, 5.3, 5.05];
    let x = Matrix::from_column_slice(10, 1, &coords);
    let u = baseline_le(&x, &KernelSpec::default(), 1).unwrap();
    assert!(orthonormality_error(&u) <= 1e-10);
    let sign_a = u[(0, 0)].signum();
    assert!((0..5).all(|i| u[(0, i)].signum() == sign_a));
    assert!((5..10).all(|i| u[(0, i)].signum() == -sign_a));
}

#[test]
fn baseline_le_with_identity_kernel_is_orthonormal() {
    let x = Matrix::from_fn(6, 2, |i, j| (100 * i + j) as f64);
    let kernel = KernelSpec::Gaussian {
        bandwidth: Bandwidth::Fixed(1e-3),
    };
    let u = baseline_le(&x, &kernel, 2).unwrap();
    assert!(orthonormality_error(&u) <= 1e-10);
}

fn zero_noise() -> MultiViewDataset {
    synth_multiview(&SynthParams::new(80, 2, 4, 4, vec![6, 8], 0.0, 2)).unwrap()
}

#[test]
fn zero_noise_views_classify_perfectly() {
    let data = zero_noise();
    let labels = data.labels().unwrap();
    for v in 0..2 {
        let rep =
            classify_embedding(&data.view(v).transpose(), labels, 0.5, 5, 0, Metric::L2).unwrap();
        assert_eq!(rep.mean_accuracy, 1.0, "view {v}");
    }
}

#[test]
fn classify_protocol_reports_per_repeat_and_is_deterministic() {
    let data = zero_noise();
    let mut cfg = FitConfig::new(vec![3]);
    cfg.max_sweeps = 5;
    let a = classify_protocol(&data, &cfg, 0.5, 4, 9).unwrap();
    let b = classify_protocol(&data, &cfg, 0.5, 4, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.per_repeat.len(), 4);
    assert!(a.max_accuracy >= a.mean_accuracy);
}

#[test]
fn zscore_has_unit_population_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z = zscore(&random_matrix(30, 4, &mut rng));
    for c in z.column_iter() {
        assert!(c.mean().abs() < 1e-12);
        assert!((c.map(|v| v * v).mean() - 1.0).abs() < 1e-12);
    }
}

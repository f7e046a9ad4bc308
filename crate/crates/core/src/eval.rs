//! Evaluation protocol: 1-NN classification over repeated random splits,
//! top-k retrieval metrics, and the single-view baselines.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::data::{split_indices, MultiViewDataset};
use crate::error::{Error, Result};
use crate::graphs::{
    consensus_matrix, embedding_cost, kernel_matrix, knn, lle_weights, ConsensusKind, KernelSpec,
    DEFAULT_EPS_REG,
};
use crate::solver::{fit, init_view, symmetric_eig_smallest, FitConfig};
use crate::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1,
    L2,
}

impl Metric {
    fn distance(self, a: nalgebra::DVectorView<f64>, b: nalgebra::DVectorView<f64>) -> f64 {
        let diffs = a.iter().zip(b.iter()).map(|(x, y)| x - y);
        match self {
            Metric::L1 => diffs.map(f64::abs).sum(),
            // squared distance preserves the ordering
            Metric::L2 => diffs.map(|d| d * d).sum(),
        }
    }
}

/// Labels each query column with the label of its nearest reference column.
/// Ties go to the lowest reference index.
pub fn one_nn(
    reference: &Matrix,
    labels: &[String],
    queries: &Matrix,
    metric: Metric,
) -> Result<Vec<String>> {
    if reference.ncols() == 0 {
        return Err(Error::param("1-NN needs at least one reference"));
    }
    if labels.len() != reference.ncols() {
        return Err(Error::LabelCount {
            expected: reference.ncols(),
            found: labels.len(),
        });
    }
    if reference.nrows() != queries.nrows() {
        return Err(Error::shape(format!(
            "references have dimension {}, queries {}",
            reference.nrows(),
            queries.nrows()
        )));
    }
    Ok(queries
        .column_iter()
        .map(|q| {
            let mut best = (f64::INFINITY, 0);
            for (j, r) in reference.column_iter().enumerate() {
                let d = metric.distance(q.as_view(), r.as_view());
                if d < best.0 {
                    best = (d, j);
                }
            }
            labels[best.1].clone()
        })
        .collect())
}

pub fn accuracy(predicted: &[String], truth: &[String]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::param("accuracy of an empty label list"));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub precision: f64,
    pub recall: f64,
    pub map: f64,
    /// `2PR / (P + R)`
    pub f1_standard: f64,
    /// `PR / (P + R)`, half the standard F1.
    pub f1_paper: f64,
    pub top_k: usize,
}

impl RetrievalReport {
    /// Fills in both F1 forms from mean precision and recall.
    pub fn from_means(precision: f64, recall: f64, map: f64, top_k: usize) -> Self {
        let denom = precision + recall;
        let f1_paper = if denom > 0.0 {
            precision * recall / denom
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            map,
            f1_standard: 2.0 * f1_paper,
            f1_paper,
            top_k,
        }
    }
}

/// Mean precision@k, recall@k and truncated average precision.
///
/// Average precision for one query is `Σ_{r ≤ k} P(r)·rel(r) / |relevant|`.
pub fn retrieval_metrics(
    rankings: &[Vec<usize>],
    relevance: &[BTreeSet<usize>],
    top_k: usize,
) -> Result<RetrievalReport> {
    if rankings.len() != relevance.len() {
        return Err(Error::shape(format!(
            "{} rankings for {} relevance sets",
            rankings.len(),
            relevance.len()
        )));
    }
    if rankings.is_empty() || top_k == 0 {
        return Err(Error::param(
            "retrieval needs at least one query and top_k ≥ 1",
        ));
    }
    let (mut p_sum, mut r_sum, mut ap_sum) = (0.0, 0.0, 0.0);
    for (q, (ranking, relevant)) in rankings.iter().zip(relevance).enumerate() {
        if ranking.len() < top_k {
            return Err(Error::param(format!(
                "query {q} ranks {} items, fewer than top_k = {top_k}",
                ranking.len()
            )));
        }
        if relevant.is_empty() {
            return Err(Error::param(format!("query {q} has no relevant items")));
        }
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (r, item) in ranking[..top_k].iter().enumerate() {
            if relevant.contains(item) {
                hits += 1;
                ap += hits as f64 / (r + 1) as f64;
            }
        }
        p_sum += hits as f64 / top_k as f64;
        r_sum += hits as f64 / relevant.len() as f64;
        ap_sum += ap / relevant.len() as f64;
    }
    let q = rankings.len() as f64;
    Ok(RetrievalReport::from_means(
        p_sum / q,
        r_sum / q,
        ap_sum / q,
        top_k,
    ))
}

/// Leave-one-out retrieval over the columns of `embedding`: every sample
/// queries all others, ranked by `metric` with ties to the lower index, and
/// the relevant set is every other sample sharing its label. Samples whose
/// class has no other member are not used as queries.
pub fn retrieve_protocol(
    embedding: &Matrix,
    labels: &[String],
    top_k: usize,
    metric: Metric,
) -> Result<RetrievalReport> {
    let n = embedding.ncols();
    if labels.len() != n {
        return Err(Error::LabelCount {
            expected: n,
            found: labels.len(),
        });
    }
    if top_k == 0 || top_k >= n {
        return Err(Error::param(format!(
            "top_k must lie in [1, {}], got {top_k}",
            n.saturating_sub(1)
        )));
    }
    let mut rankings = Vec::new();
    let mut relevance = Vec::new();
    for q in 0..n {
        let relevant: BTreeSet<usize> = (0..n)
            .filter(|&j| j != q && labels[j] == labels[q])
            .collect();
        if relevant.is_empty() {
            continue;
        }
        let mut ranked: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != q)
            .map(|j| (metric.distance(embedding.column(q), embedding.column(j)), j))
            .collect();
        ranked.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        rankings.push(ranked.into_iter().map(|p| p.1).collect());
        relevance.push(relevant);
    }
    retrieval_metrics(&rankings, &relevance, top_k)
}

/// Stacks per-view embeddings row-wise in view order.
pub fn concat_embeddings(embeddings: &[Matrix]) -> Result<Matrix> {
    let first = embeddings
        .first()
        .ok_or_else(|| Error::param("no embeddings to concatenate"))?;
    let n = first.ncols();
    if let Some(bad) = embeddings.iter().find(|e| e.ncols() != n) {
        return Err(Error::shape(format!(
            "embedding has {} columns, expected {n}",
            bad.ncols()
        )));
    }
    let rows: usize = embeddings.iter().map(|e| e.nrows()).sum();
    let mut out = Matrix::zeros(rows, n);
    let mut offset = 0;
    for e in embeddings {
        out.rows_mut(offset, e.nrows()).copy_from(e);
        offset += e.nrows();
    }
    Ok(out)
}

/// Single-view LLE on `x` (`N × D`), skipping the constant eigenvector.
pub fn baseline_lle(x: &Matrix, k: usize, d: usize) -> Result<Matrix> {
    let weights = lle_weights(x, &knn(x, k)?, DEFAULT_EPS_REG)?;
    init_view(&embedding_cost(&weights), d, true)
}

/// Laplacian eigenmaps: bottom non-trivial eigenvectors of the normalized
/// Laplacian of a kernel graph over the samples of `x`.
pub fn baseline_le(x: &Matrix, kernel: &KernelSpec, d: usize) -> Result<Matrix> {
    let k = kernel_matrix(&x.transpose(), kernel)?;
    let l = consensus_matrix(ConsensusKind::NormalizedLe, &k)?;
    Ok(symmetric_eig_smallest(&l, d, true)?.vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub mean_accuracy: f64,
    pub max_accuracy: f64,
    pub per_repeat: Vec<f64>,
    pub repeats: usize,
}

/// 1-NN accuracy over `repeats` stratified splits of a fixed embedding
/// (`d × N`); repeat `r` uses split seed `seed + r`.
pub fn classify_embedding(
    embedding: &Matrix,
    labels: &[String],
    train_ratio: f64,
    repeats: usize,
    seed: u64,
    metric: Metric,
) -> Result<ClassificationReport> {
    if repeats == 0 {
        return Err(Error::param("repeats must be at least 1"));
    }
    if labels.len() != embedding.ncols() {
        return Err(Error::LabelCount {
            expected: embedding.ncols(),
            found: labels.len(),
        });
    }
    let per_repeat = (0..repeats as u64)
        .map(|r| {
            let s = split_indices(
                labels.len(),
                Some(labels),
                train_ratio,
                seed.wrapping_add(r),
            )?;
            let reference = embedding.select_columns(&s.train);
            let queries = embedding.select_columns(&s.test);
            let ref_labels: Vec<String> = s.train.iter().map(|&i| labels[i].clone()).collect();
            let truth: Vec<String> = s.test.iter().map(|&i| labels[i].clone()).collect();
            accuracy(&one_nn(&reference, &ref_labels, &queries, metric)?, &truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let mean_accuracy = per_repeat.iter().sum::<f64>() / repeats as f64;
    let max_accuracy = per_repeat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ClassificationReport {
        mean_accuracy,
        max_accuracy,
        per_repeat,
        repeats,
    })
}

/// Fits once on all samples, then scores the concatenated embedding with
/// [`classify_embedding`] under the Euclidean metric.
pub fn classify_protocol(
    dataset: &MultiViewDataset,
    config: &FitConfig,
    train_ratio: f64,
    repeats: usize,
    seed: u64,
) -> Result<ClassificationReport> {
    let labels = dataset
        .labels()
        .ok_or_else(|| Error::param("classification needs labels"))?;
    let result = fit(dataset, config)?;
    let fused = concat_embeddings(&result.embeddings)?;
    classify_embedding(&fused, labels, train_ratio, repeats, seed, Metric::L2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_match_wins() {
        let refs = Matrix::from_row_slice(2, 4, &[0.0, 1.0, 2.0, 3.0, 5.0, 4.0, 3.0, 2.0]);
        let q = Matrix::from_column_slice(2, 1, &[3.0, 2.0]);
        let out = one_nn(&refs, &labels(&["A", "A", "A", "B"]), &q, Metric::L2).unwrap();
        assert_eq!(out, labels(&["B"]));
    }

    #[test]
    fn nearer_point_wins() {
        let refs = Matrix::from_row_slice(1, 2, &[0.0, 10.0]);
        let q = Matrix::from_row_slice(1, 1, &[2.0]);
        assert_eq!(
            one_nn(&refs, &labels(&["A", "B"]), &q, Metric::L1).unwrap(),
            labels(&["A"])
        );
    }

    #[test]
    fn tie_goes_to_lowest_reference() {
        let refs = Matrix::from_row_slice(1, 2, &[0.0, 2.0]);
        let q = Matrix::from_row_slice(1, 1, &[1.0]);
        assert_eq!(
            one_nn(&refs, &labels(&["A", "B"]), &q, Metric::L2).unwrap(),
            labels(&["A"])
        );
    }

    #[test]
    fn one_nn_dimension_mismatch() {
        let refs = Matrix::zeros(2, 3);
        assert!(one_nn(
            &refs,
            &labels(&["a", "b", "c"]),
            &Matrix::zeros(3, 1),
            Metric::L2
        )
        .is_err());
    }

    #[test]
    fn accuracy_counts() {
        let t = labels(&["a", "b", "c", "d"]);
        assert_eq!(accuracy(&t, &t).unwrap(), 1.0);
        assert_eq!(accuracy(&labels(&["x", "y", "z", "w"]), &t).unwrap(), 0.0);
        assert_eq!(accuracy(&labels(&["a", "b", "c", "x"]), &t).unwrap(), 0.75);
        assert!(accuracy(&t[..2], &t).is_err());
    }

    #[test]
    fn perfect_ranking() {
        let rel = vec![BTreeSet::from([4, 7])];
        let r = retrieval_metrics(&[vec![7, 4, 1]], &rel, 2).unwrap();
        assert_eq!(
            (r.precision, r.recall, r.map, r.f1_standard, r.f1_paper),
            (1.0, 1.0, 1.0, 1.0, 0.5)
        );
    }

    #[test]
    fn truncated_average_precision() {
        // relevant at ranks 2 and 3 of 3: AP = (1/2 + 2/3) / 2
        let rel = vec![BTreeSet::from([1, 2])];
        let r = retrieval_metrics(&[vec![0, 1, 2]], &rel, 3).unwrap();
        assert!((r.map - (0.5 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.recall, 1.0);
    }

    #[test]
    fn retrieval_errors() {
        let rel = vec![BTreeSet::from([1])];
        assert!(retrieval_metrics(&[vec![1]], &rel, 2).is_err());
        assert!(retrieval_metrics(&[vec![1, 2]], &[BTreeSet::new()], 1).is_err());
    }

    #[test]
    fn f1_forms() {
        let r = RetrievalReport::from_means(0.0, 0.0, 0.0, 2);
        assert_eq!((r.f1_paper, r.f1_standard), (0.0, 0.0));
        let r = RetrievalReport::from_means(0.5, 0.25, 0.0, 2);
        assert!(r.f1_paper < r.f1_standard);
    }

    #[test]
    fn concat_shapes_and_slices() {
        let a = Matrix::from_fn(2, 4, |i, j| (i * 4 + j) as f64);
        let b = Matrix::from_fn(3, 4, |i, j| -((i * 4 + j) as f64));
        let c = concat_embeddings(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(c.shape(), (5, 4));
        assert_eq!(c.rows(0, 2), a);
        assert_eq!(c.rows(2, 3), b);
        assert_eq!(concat_embeddings(std::slice::from_ref(&a)).unwrap(), a);
        assert!(concat_embeddings(&[a, Matrix::zeros(1, 3)]).is_err());
    }

    #[test]
    fn retrieve_protocol_on_clusters() {
        let e = Matrix::from_row_slice(1, 6, &[0.0, 0.1, 0.2, 5.0, 5.1, 5.2]);
        let r =
            retrieve_protocol(&e, &labels(&["a", "a", "a", "b", "b", "b"]), 2, Metric::L1).unwrap();
        assert_eq!((r.precision, r.recall, r.map), (1.0, 1.0, 1.0));
    }
}

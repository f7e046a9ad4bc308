use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::Matrix;

/// Exact k-nearest-neighbour lists, one per sample, self excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    neighbors: Vec<Vec<usize>>,
    k: usize,
}

impl NeighborGraph {
    /// Validates that every list has `k` distinct in-range entries and
    /// never contains its own index.
    pub fn new(neighbors: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let n = neighbors.len();
        for (i, list) in neighbors.iter().enumerate() {
            if list.len() != k {
                return Err(Error::shape(format!(
                    "sample {i} has {} neighbours, expected {k}",
                    list.len()
                )));
            }
            for (a, &j) in list.iter().enumerate() {
                if j >= n || j == i || list[..a].contains(&j) {
                    return Err(Error::param(format!(
                        "invalid neighbour {j} for sample {i}"
                    )));
                }
            }
        }
        Ok(Self { neighbors, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.neighbors
    }
}

/// Brute-force Euclidean k-NN over the rows of `x`.
///
/// Lists are ordered by (distance, index), so ties go to the lower index.
pub fn knn(x: &Matrix, k: usize) -> Result<NeighborGraph> {
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(Error::param(format!(
            "k must lie in [1, {}], got {k}",
            n.saturating_sub(1)
        )));
    }
    // columns are contiguous in nalgebra, so work on the transpose
    let xt = x.transpose();
    let neighbors = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = xt.column(i);
            let mut dist: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d: f64 = xi
                        .iter()
                        .zip(xt.column(j).iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (d, j)
                })
                .collect();
            dist.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            dist.truncate(k);
            dist.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(NeighborGraph { neighbors, k })
}

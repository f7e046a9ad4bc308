use rayon::prelude::*;

use super::knn::NeighborGraph;
use crate::error::{Error, Result};
use crate::Matrix;

/// Trace-relative Tikhonov term added to each local Gram matrix.
pub const DEFAULT_EPS_REG: f64 = 1e-3;

const ROW_SUM_TOL: f64 = 1e-10;

/// Sparse row-stochastic reconstruction matrix `S` with a zero diagonal.
///
/// Row `i` holds the weights that rebuild sample `i` from its neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl WeightMatrix {
    /// Accepts `(column, weight)` lists, rejecting out-of-range or diagonal
    /// entries and rows that do not sum to 1 within 1e-10.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row
                .iter()
                .any(|&(j, w)| j >= n || (j == i && w != 0.0) || !w.is_finite())
            {
                return Err(Error::param(format!("row {i} has an invalid entry")));
            }
            let sum: f64 = row.iter().map(|e| e.1).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::param(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(Self { rows })
    }

    /// Dense constructor; zero entries are dropped.
    pub fn from_dense(m: &Matrix) -> Result<Self> {
        super::require_square(m, "weight matrix")?;
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter(|&j| m[(i, j)] != 0.0)
                    .map(|j| (j, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        let mut m = Matrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] += w;
            }
        }
        m
    }
}

/// LLE reconstruction weights.
///
/// For each sample the local Gram matrix of neighbour offsets is regularized
/// by `eps_reg · trace / k` on the diagonal (`eps_reg` alone when the trace
/// is zero), solved against the ones vector, and rescaled to sum to one.
/// Rows are laid out in the graph's neighbour order.
pub fn lle_weights(x: &Matrix, graph: &NeighborGraph, eps_reg: f64) -> Result<WeightMatrix> {
    if graph.len() != x.nrows() {
        return Err(Error::shape(format!(
            "graph has {} samples, data has {}",
            graph.len(),
            x.nrows()
        )));
    }
    if !(eps_reg >= 0.0 && eps_reg.is_finite()) {
        return Err(Error::param(format!(
            "eps_reg must be finite and non-negative, got {eps_reg}"
        )));
    }
    let xt = x.transpose();
    let k = graph.k();
    let rows = (0..graph.len())
        .into_par_iter()
        .map(|i| {
            let nbrs = graph.neighbors(i);
            let offsets = Matrix::from_fn(xt.nrows(), k, |f, a| xt[(f, nbrs[a])] - xt[(f, i)]);
            let mut gram = offsets.transpose() * &offsets;
            let trace = gram.trace();
            let reg = if trace > 0.0 {
                eps_reg * trace / k as f64
            } else {
                eps_reg
            };
            for a in 0..k {
                gram[(a, a)] += reg;
            }
            let w = solve_local(gram, k).ok_or(Error::DegenerateNeighborhood { sample: i })?;
            let total = w.sum();
            let row: Vec<(usize, f64)> = nbrs
                .iter()
                .zip(w.iter())
                .map(|(&j, &wj)| (j, wj / total))
                .collect();
            if !total.is_finite() || total == 0.0 || row.iter().any(|e| !e.1.is_finite()) {
                return Err(Error::DegenerateNeighborhood { sample: i });
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    WeightMatrix::from_rows(rows).map_err(|_| {
        // rows are normalized above; a failure here means cancellation blew up
        Error::param("reconstruction weights failed the sum-to-one check")
    })
}

fn solve_local(gram: Matrix, k: usize) -> Option<nalgebra::DVector<f64>> {
    let ones = nalgebra::DVector::from_element(k, 1.0);
    if let Some(chol) = gram.clone().cholesky() {
        return Some(chol.solve(&ones));
    }
    gram.lu().solve(&ones)
}

/// `C = (I − S)ᵀ (I − S)`, symmetrized.
pub fn embedding_cost(s: &WeightMatrix) -> Matrix {
    let n = s.n();
    let residual = Matrix::identity(n, n) - s.to_dense();
    let c = residual.transpose() * &residual;
    super::symmetrize(&c)
}

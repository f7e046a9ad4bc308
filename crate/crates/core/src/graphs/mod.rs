//! Graph-side numerics: neighbour search, LLE reconstruction weights,
//! kernels, and the consensus matrices that all enter the objective as
//! `tr(U L Uᵀ)`.

mod consensus;
mod kernel;
mod knn;
mod lle;

pub use consensus::{
    consensus_matrix, quadratic_form, ConsensusKind, ConsensusSource, ConsensusVariant,
};
pub use kernel::{kernel_matrix, median_pairwise_distance, Bandwidth, KernelSpec};
pub use knn::{knn, NeighborGraph};
pub use lle::{embedding_cost, lle_weights, WeightMatrix, DEFAULT_EPS_REG};

use crate::error::{Error, Result};
use crate::Matrix;

/// Largest absolute entry of `m − mᵀ`.
pub fn asymmetry(m: &Matrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub(crate) fn require_square(m: &Matrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::shape(format!(
            "{what} must be square, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Rejects `m` when its asymmetry exceeds `tol` scaled by `max(1, max|m_ij|)`.
pub(crate) fn require_symmetric(m: &Matrix, tol: f64) -> Result<()> {
    let scale = m.amax().max(1.0);
    let deviation = asymmetry(m);
    if deviation > tol * scale {
        return Err(Error::Asymmetric { deviation });
    }
    Ok(())
}

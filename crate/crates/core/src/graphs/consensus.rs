use serde::{Deserialize, Serialize};

use super::{require_square, require_symmetric, symmetrize};
use crate::error::{Error, Result};
use crate::Matrix;

/// Which operator turns a graph into the consensus matrix `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusKind {
    /// `I − D^{-1/2} A D^{-1/2}`
    NormalizedLe,
    /// `D − A`
    UnnormalizedLe,
    /// `(I − A)ᵀ (I − A)` for a row-stochastic reconstruction graph `A`
    Reconstruction,
    /// `H A H` with the centering matrix `H = I − 11ᵀ/N`
    HsicCentered,
}

/// Where the graph behind `L` is built: on the current embedding (rebuilt
/// every sweep) or once on the input features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsensusSource {
    Embedding,
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConsensusVariant {
    pub kind: ConsensusKind,
    pub source: ConsensusSource,
}

impl Default for ConsensusVariant {
    fn default() -> Self {
        Self {
            kind: ConsensusKind::NormalizedLe,
            source: ConsensusSource::Embedding,
        }
    }
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Builds the symmetric matrix `L` such that the consensus penalty of an
/// embedding `U` against this graph is `tr(U L Uᵀ)`.
///
/// Similarity kinds require a symmetric `a`. For `Reconstruction`, row `i`
/// of `a` holds the weights that rebuild sample `i`, so `U ≈ U Aᵀ` and the
/// residual `‖U − U Aᵀ‖²_F` equals `tr(U (I − A)ᵀ(I − A) Uᵀ)`.
///
/// Note that for a symmetric similarity `G`,
/// `Σᵢⱼ Gᵢⱼ ‖uᵢ − uⱼ‖² = 2 tr(U (D − G) Uᵀ)`; the factor 2 is absorbed into
/// the consensus weight.
pub fn consensus_matrix(kind: ConsensusKind, a: &Matrix) -> Result<Matrix> {
    require_square(a, "graph")?;
    let n = a.nrows();
    let l = match kind {
        ConsensusKind::UnnormalizedLe => {
            require_symmetric(a, SYMMETRY_TOL)?;
            let degrees: Vec<f64> = a.row_iter().map(|r| r.sum()).collect();
            let mut l = -a.clone();
            for (i, d) in degrees.into_iter().enumerate() {
                l[(i, i)] += d;
            }
            l
        }
        ConsensusKind::NormalizedLe => {
            require_symmetric(a, SYMMETRY_TOL)?;
            let mut inv_sqrt = Vec::with_capacity(n);
            for (row, r) in a.row_iter().enumerate() {
                let d = r.sum();
                if d.is_nan() || d <= 0.0 {
                    return Err(Error::ZeroDegree { row });
                }
                inv_sqrt.push(1.0 / d.sqrt());
            }
            Matrix::from_fn(n, n, |i, j| {
                let off = a[(i, j)] * inv_sqrt[i] * inv_sqrt[j];
                if i == j {
                    1.0 - off
                } else {
                    -off
                }
            })
        }
        ConsensusKind::Reconstruction => {
            let residual = Matrix::identity(n, n) - a;
            residual.transpose() * &residual
        }
        ConsensusKind::HsicCentered => {
            require_symmetric(a, SYMMETRY_TOL)?;
            let h = Matrix::identity(n, n) - Matrix::from_element(n, n, 1.0 / n as f64);
            &h * a * &h
        }
    };
    Ok(symmetrize(&l))
}

/// `tr(U L Uᵀ)` accumulated one embedding row at a time.
pub fn quadratic_form(u: &Matrix, l: &Matrix) -> Result<f64> {
    if l.nrows() != l.ncols() || u.ncols() != l.nrows() {
        return Err(Error::shape(format!(
            "embedding is {}×{}, matrix is {}×{}",
            u.nrows(),
            u.ncols(),
            l.nrows(),
            l.ncols()
        )));
    }
    let mut total = 0.0;
    for row in u.row_iter() {
        let r = row.transpose();
        total += (l * &r).dot(&r);
    }
    Ok(total)
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Matrix;

/// Gaussian kernel width: a fixed value or the median-distance heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    Median,
}

/// Similarity kernel evaluated between sample columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `zᵢ · zⱼ`
    Linear,
    /// `(zᵢ · zⱼ + offset)^degree`
    Polynomial { degree: u32, offset: f64 },
    /// `exp(−‖zᵢ − zⱼ‖² / 2σ²)`
    Gaussian { bandwidth: Bandwidth },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Gaussian {
            bandwidth: Bandwidth::Median,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, offset } => {
                if degree == 0 || !(offset >= 0.0 && offset.is_finite()) {
                    return Err(Error::param(
                        "polynomial kernel needs degree ≥ 1 and offset ≥ 0",
                    ));
                }
                Ok(())
            }
            KernelSpec::Gaussian {
                bandwidth: Bandwidth::Fixed(s),
            } if !(s > 0.0 && s.is_finite()) => Err(Error::param(format!(
                "gaussian bandwidth must be positive, got {s}"
            ))),
            KernelSpec::Gaussian { .. } => Ok(()),
        }
    }
}

fn pairwise_sq_distances(z: &Matrix) -> Matrix {
    let n = z.ncols();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = z
                .column(i)
                .iter()
                .zip(z.column(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Median of the `N(N−1)/2` pairwise Euclidean distances between the
/// columns of `z`; the two central values are averaged for an even count.
pub fn median_pairwise_distance(z: &Matrix) -> f64 {
    median_from_sq(&pairwise_sq_distances(z))
}

fn median_from_sq(sq: &Matrix) -> f64 {
    let n = sq.nrows();
    let mut dists: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| sq[(i, j)].sqrt())
        .collect();
    if dists.is_empty() {
        return 0.0;
    }
    dists.sort_unstable_by(f64::total_cmp);
    let m = dists.len();
    if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    }
}

/// Dense `N × N` kernel over the `N` columns of `z`.
///
/// A `Median` bandwidth resolves to [`median_pairwise_distance`], falling
/// back to 1.0 when that median is zero.
pub fn kernel_matrix(z: &Matrix, spec: &KernelSpec) -> Result<Matrix> {
    spec.validate()?;
    let k = match *spec {
        KernelSpec::Linear => z.transpose() * z,
        KernelSpec::Polynomial { degree, offset } => {
            (z.transpose() * z).map(|g| (g + offset).powi(degree as i32))
        }
        KernelSpec::Gaussian { bandwidth } => {
            let sq = pairwise_sq_distances(z);
            let sigma = match bandwidth {
                Bandwidth::Fixed(s) => s,
                Bandwidth::Median => match median_from_sq(&sq) {
                    m if m > 0.0 => m,
                    _ => 1.0,
                },
            };
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::param(format!(
                    "resolved bandwidth {sigma} is not positive"
                )));
            }
            let denom = 2.0 * sigma * sigma;
            sq.map(|d| (-d / denom).exp())
        }
    };
    Ok(super::symmetrize(&k))
}

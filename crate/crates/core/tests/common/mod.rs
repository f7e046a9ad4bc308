//! Reference routines used only by the tests. None of them call into the
//! crate's numerical paths.
#![allow(dead_code, clippy::needless_range_loop)]

use mvlle::Matrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Cyclic Jacobi eigendecomposition. Returns eigenvalues ascending with
/// matching unit eigenvectors as columns.
pub fn jacobi_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = Matrix::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].partial_cmp(&a[(y, y)]).unwrap());
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Solves the sum-to-one constrained least squares for one LLE row through
/// its KKT system `[G 1; 1ᵀ 0] [w; μ] = [0; 1]`, eliminating by hand.
pub fn constrained_ls_row(
    points: &Matrix,
    i: usize,
    neighbors: &[usize],
    eps_reg: f64,
) -> Vec<f64> {
    let k = neighbors.len();
    let d = points.ncols();
    let mut g = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            g[a][b] = (0..d)
                .map(|f| {
                    (points[(neighbors[a], f)] - points[(i, f)])
                        * (points[(neighbors[b], f)] - points[(i, f)])
                })
                .sum();
        }
    }
    let trace: f64 = (0..k).map(|a| g[a][a]).sum();
    let reg = if trace > 0.0 {
        eps_reg * trace / k as f64
    } else {
        eps_reg
    };
    let size = k + 1;
    let mut sys = vec![vec![0.0; size + 1]; size];
    for a in 0..k {
        for b in 0..k {
            sys[a][b] = g[a][b] + if a == b { reg } else { 0.0 };
        }
        sys[a][k] = 1.0;
        sys[k][a] = 1.0;
    }
    sys[k][size] = 1.0;
    gauss_solve(sys)[..k].to_vec()
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub fn gauss_solve(mut sys: Vec<Vec<f64>>) -> Vec<f64> {
    let n = sys.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| sys[a][col].abs().partial_cmp(&sys[b][col].abs()).unwrap())
            .unwrap();
        sys.swap(col, pivot);
        for row in (col + 1)..n {
            let f = sys[row][col] / sys[col][col];
            for c in col..=n {
                sys[row][c] -= f * sys[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = ((row + 1)..n).map(|c| sys[row][c] * x[c]).sum();
        x[row] = (sys[row][n] - s) / sys[row][row];
    }
    x
}

/// Random `d × n` matrix with orthonormal rows from Gram–Schmidt on
/// Gaussian rows. With `centered`, rows are also orthogonal to the ones
/// vector.
pub fn random_orthonormal<R: Rng>(d: usize, n: usize, centered: bool, rng: &mut R) -> Matrix {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if centered {
        basis.push(vec![1.0 / (n as f64).sqrt(); n]);
    }
    let skip = basis.len();
    while basis.len() < d + skip {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &basis {
                let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            basis.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_fn(d, n, |r, c| basis[r + skip][c])
}

/// Trace of `U M Uᵀ` by explicit triple sum.
pub fn trace_form(u: &Matrix, m: &Matrix) -> f64 {
    let mut total = 0.0;
    for a in 0..u.nrows() {
        for i in 0..u.ncols() {
            for j in 0..u.ncols() {
                total += u[(a, i)] * m[(i, j)] * u[(a, j)];
            }
        }
    }
    total
}

/// Orthogonal projector onto the row space of `u`.
pub fn projector(u: &Matrix) -> Matrix {
    u.transpose() * u
}

pub fn orthonormality_error(u: &Matrix) -> f64 {
    (u * u.transpose() - Matrix::identity(u.nrows(), u.nrows())).norm()
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Points on the parabola `y = x²` for `x` evenly spaced in `[-1, 1]`.
pub fn parabola(n: usize) -> Matrix {
    Matrix::from_fn(n, 2, |i, j| {
        let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
        if j == 0 {
            x
        } else {
            x * x
        }
    })
}

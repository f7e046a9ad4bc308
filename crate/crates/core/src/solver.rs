//! Alternating eigendecomposition solver for multi-view LLE.
//!
//! Every view keeps its own LLE cost `C^v` and a consensus matrix `L^v`
//! built from a similarity graph on that view. The joint objective is
//!
//! ```text
//! Σ_v tr(U^v C^v U^vᵀ) + λ_C Σ_{v≠w} tr(U^v L^w U^vᵀ)
//! ```
//!
//! over row-orthonormal `U^v`. With the `L` matrices frozen the problem
//! separates per view and each piece is minimized exactly by the bottom
//! eigenvectors of `C^v + λ_C Σ_{w≠v} L^w`. A sweep refreshes every `L`
//! first and then updates every `U` from that frozen set, so views can be
//! processed in any order (or in parallel) with the same result.
//!
//! `lambda_r` is accepted for completeness but has no effect: the smoothness
//! term is constant under the orthonormality constraint.

use std::time::{Duration, Instant};

use nalgebra::{DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{zscore, MultiViewDataset};
use crate::error::{Error, Result};
use crate::graphs::{
    self, consensus_matrix, embedding_cost, kernel_matrix, knn, lle_weights, quadratic_form,
    ConsensusKind, ConsensusSource, ConsensusVariant, KernelSpec, WeightMatrix, DEFAULT_EPS_REG,
};
use crate::Matrix;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_LAMBDA_C: f64 = 0.5;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_SWEEPS: usize = 50;

/// Cosine with the normalized ones vector above which the bottom
/// eigenvector is treated as the trivial constant direction.
pub const TRIVIAL_COSINE: f64 = 0.99;

const EIG_SYMMETRY_TOL: f64 = 1e-10;
const DIVISION_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocess {
    None,
    #[default]
    Zscore,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Neighbours per sample for the LLE graph.
    pub k: usize,
    /// Embedding dimension per view; a single entry applies to every view.
    pub dims: Vec<usize>,
    pub lambda_c: f64,
    /// Carried for the record only; see the module docs.
    pub lambda_r: f64,
    pub kernel: KernelSpec,
    pub variant: ConsensusVariant,
    pub tol: f64,
    pub max_sweeps: usize,
    pub skip_trivial: bool,
    pub eps_reg: f64,
    pub preprocess: Preprocess,
    /// Recorded with results; the solver itself draws no random numbers.
    pub seed: u64,
}

impl FitConfig {
    pub fn new(dims: Vec<usize>) -> Self {
        Self {
            k: DEFAULT_K,
            dims,
            lambda_c: DEFAULT_LAMBDA_C,
            lambda_r: 0.0,
            kernel: KernelSpec::default(),
            variant: ConsensusVariant::default(),
            tol: DEFAULT_TOL,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            skip_trivial: true,
            eps_reg: DEFAULT_EPS_REG,
            preprocess: Preprocess::default(),
            seed: 0,
        }
    }

    pub fn dim(&self, view: usize) -> usize {
        if self.dims.len() == 1 {
            self.dims[0]
        } else {
            self.dims[view]
        }
    }

    pub fn validate(&self, n: usize, m_views: usize) -> Result<()> {
        if self.k == 0 || self.k >= n {
            return Err(Error::param(format!(
                "k must lie in [1, {}], got {}",
                n - 1,
                self.k
            )));
        }
        if self.dims.len() != 1 && self.dims.len() != m_views {
            return Err(Error::param(format!(
                "{} dims given for {m_views} views",
                self.dims.len()
            )));
        }
        let max_dim = n - usize::from(self.skip_trivial) - 1;
        for v in 0..m_views {
            let d = self.dim(v);
            if d == 0 || d > max_dim {
                return Err(Error::param(format!(
                    "dimension {d} for view {v} must lie in [1, {max_dim}]"
                )));
            }
        }
        for (name, value) in [
            ("lambda_c", self.lambda_c),
            ("lambda_r", self.lambda_r),
            ("eps_reg", self.eps_reg),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::param(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::param(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::param("max_sweeps must be at least 1"));
        }
        self.kernel.validate()
    }
}

/// Bottom eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// `d × N`, one unit eigenvector per row.
    pub vectors: Matrix,
}

/// The `d` smallest eigenpairs of `m`, sorted ascending.
///
/// With `skip_trivial`, the bottom eigenvector is dropped when its cosine
/// with the normalized ones vector exceeds [`TRIVIAL_COSINE`]. Each vector is
/// signed so that its largest-magnitude coordinate (lowest index on ties) is
/// positive.
pub fn symmetric_eig_smallest(m: &Matrix, d: usize, skip_trivial: bool) -> Result<Eigenpairs> {
    graphs::require_square(m, "eigenproblem matrix")?;
    graphs::require_symmetric(m, EIG_SYMMETRY_TOL)?;
    let n = m.nrows();
    if d == 0 || d + usize::from(skip_trivial) > n {
        return Err(Error::param(format!(
            "cannot take {d} eigenvectors of a {n}×{n} matrix"
        )));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });

    let mut start = 0;
    if skip_trivial {
        let bottom = eig.eigenvectors.column(order[0]);
        let cosine = bottom.sum().abs() / (n as f64).sqrt() / bottom.norm();
        if cosine > TRIVIAL_COSINE {
            start = 1;
        }
    }
    if start + d > n {
        return Err(Error::param(format!(
            "only {} eigenvectors remain after skipping",
            n - start
        )));
    }

    let chosen = &order[start..start + d];
    let values = chosen.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = signed_rows(
        chosen
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned()),
        n,
    );
    Ok(Eigenpairs { values, vectors })
}

/// Stacks vectors as rows, flipping each so that its largest-magnitude
/// coordinate (lowest index on ties) is positive.
fn signed_rows(columns: impl Iterator<Item = DVector<f64>>, n: usize) -> Matrix {
    let columns: Vec<_> = columns.collect();
    let mut out = Matrix::zeros(columns.len(), n);
    for (row, col) in columns.iter().enumerate() {
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            out[(row, i)] = sign * col[i];
        }
    }
    out
}

/// The `d` smallest eigenpairs of `m` compressed to the orthogonal
/// complement of the ones vector.
///
/// A Householder reflector `H` maps `e₀` onto `1/√N`, so columns `1..N` of
/// `H` span the complement. The eigenproblem of the trailing
/// `(N−1) × (N−1)` block of `H M H` is solved and its vectors are lifted
/// back through `H`. Every returned row is orthogonal to the ones vector,
/// and the rows minimize `tr(U M Uᵀ)` over all such row-orthonormal `U`.
pub fn eig_smallest_centered(m: &Matrix, d: usize) -> Result<Eigenpairs> {
    graphs::require_square(m, "eigenproblem matrix")?;
    graphs::require_symmetric(m, EIG_SYMMETRY_TOL)?;
    let n = m.nrows();
    if d == 0 || d + 1 > n {
        return Err(Error::param(format!(
            "cannot take {d} centered eigenvectors of a {n}×{n} matrix"
        )));
    }
    let s = 1.0 / (n as f64).sqrt();
    let mut v = DVector::from_element(n, -s);
    v[0] += 1.0;
    let beta = 1.0 / (1.0 - s);
    let mv = m * &v;
    let vmv = v.dot(&mv);
    let reflected = m - (&v * mv.transpose()) * beta - (&mv * v.transpose()) * beta
        + (&v * v.transpose()) * (beta * beta * vmv);
    let block = graphs::symmetrize(&reflected.view((1, 1), (n - 1, n - 1)).into_owned());

    let eig = SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..n - 1).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let chosen = &order[..d];
    let values = chosen.iter().map(|&i| eig.eigenvalues[i]).collect();
    let lifted = chosen.iter().map(|&i| {
        let y = eig.eigenvectors.column(i);
        let mut z = DVector::zeros(n);
        z.rows_mut(1, n - 1).copy_from(&y);
        let proj = v.dot(&z);
        z - &v * (beta * proj)
    });
    Ok(Eigenpairs {
        values,
        vectors: signed_rows(lifted, n),
    })
}

/// Bottom-eigenvector embedding of a cost matrix. With `skip_trivial` the
/// search is restricted to embeddings orthogonal to the ones vector (see
/// [`eig_smallest_centered`]).
pub fn init_view(cost: &Matrix, d: usize, skip_trivial: bool) -> Result<Matrix> {
    let pairs = if skip_trivial {
        eig_smallest_centered(cost, d)?
    } else {
        symmetric_eig_smallest(cost, d, false)?
    };
    Ok(pairs.vectors)
}

/// `C_v + λ_C Σ L^w` over the other views' consensus matrices, symmetrized.
pub fn subproblem_matrix(cost: &Matrix, others: &[&Matrix], lambda_c: f64) -> Result<Matrix> {
    graphs::require_square(cost, "cost matrix")?;
    let mut m = cost.clone();
    for l in others {
        if l.shape() != cost.shape() {
            return Err(Error::shape(format!(
                "consensus matrix is {:?}, cost is {:?}",
                l.shape(),
                cost.shape()
            )));
        }
        if lambda_c != 0.0 {
            m += *l * lambda_c;
        }
    }
    Ok(graphs::symmetrize(&m))
}

/// Per-view solver state.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewState {
    pub weights: WeightMatrix,
    /// LLE cost `(I − S)ᵀ(I − S)`.
    pub cost: Matrix,
    /// Graph behind the consensus matrix: a kernel matrix, or the dense
    /// reconstruction weights for the reconstruction variant.
    pub kernel: Option<Matrix>,
    pub consensus: Option<Matrix>,
    /// `d × N`, orthonormal rows.
    pub embedding: Matrix,
}

impl ViewState {
    /// Builds the LLE graph on `x` (`N × D`) and the initial embedding.
    pub fn initialize(x: &Matrix, dim: usize, config: &FitConfig) -> Result<Self> {
        let graph = knn(x, config.k)?;
        let weights = lle_weights(x, &graph, config.eps_reg)?;
        let cost = embedding_cost(&weights);
        let embedding = init_view(&cost, dim, config.skip_trivial)?;
        Ok(Self {
            weights,
            cost,
            kernel: None,
            consensus: None,
            embedding,
        })
    }

    pub fn dim(&self) -> usize {
        self.embedding.nrows()
    }

    fn consensus(&self) -> Result<&Matrix> {
        self.consensus
            .as_ref()
            .ok_or_else(|| Error::param("consensus matrix requested before it was built"))
    }
}

/// Rebuilds the view's graph and consensus matrix.
///
/// With an input source the matrix depends only on `input` (the view's
/// `N × D` features) and is built once; later calls leave it untouched.
pub fn refresh_consensus(state: &mut ViewState, input: &Matrix, config: &FitConfig) -> Result<()> {
    let ConsensusVariant { kind, source } = config.variant;
    if source == ConsensusSource::Input && state.consensus.is_some() {
        return Ok(());
    }
    let graph = match (kind, source) {
        (ConsensusKind::Reconstruction, ConsensusSource::Input) => state.weights.to_dense(),
        (ConsensusKind::Reconstruction, ConsensusSource::Embedding) => {
            let points = state.embedding.transpose();
            lle_weights(&points, &knn(&points, config.k)?, config.eps_reg)?.to_dense()
        }
        (_, ConsensusSource::Input) => kernel_matrix(&input.transpose(), &config.kernel)?,
        (_, ConsensusSource::Embedding) => kernel_matrix(&state.embedding, &config.kernel)?,
    };
    state.consensus = Some(consensus_matrix(kind, &graph)?);
    state.kernel = Some(graph);
    Ok(())
}

/// `C_v + λ_C Σ_{w≠v} L^w` for view `v` of `states`.
pub fn frozen_subproblem(states: &[ViewState], v: usize, lambda_c: f64) -> Result<Matrix> {
    let others = states
        .iter()
        .enumerate()
        .filter(|&(w, _)| w != v)
        .map(|(_, s)| s.consensus())
        .collect::<Result<Vec<_>>>()?;
    subproblem_matrix(&states[v].cost, &others, lambda_c)
}

/// Minimizer of the frozen subproblem for one view. `others` must hold the
/// remaining views with current consensus matrices.
pub fn update_view(state: &ViewState, others: &[&ViewState], config: &FitConfig) -> Result<Matrix> {
    let ls = others
        .iter()
        .map(|s| s.consensus())
        .collect::<Result<Vec<_>>>()?;
    let m = subproblem_matrix(&state.cost, &ls, config.lambda_c)?;
    init_view(&m, state.dim(), config.skip_trivial)
}

/// Joint objective over ordered view pairs.
///
/// Consensus matrices are only needed when there is more than one view and
/// `lambda_c` is non-zero.
pub fn objective(states: &[ViewState], lambda_c: f64) -> Result<f64> {
    let mut total = 0.0;
    for (v, state) in states.iter().enumerate() {
        total += quadratic_form(&state.embedding, &state.cost)?;
        if lambda_c == 0.0 {
            continue;
        }
        for (w, other) in states.iter().enumerate() {
            if w != v {
                total += lambda_c * quadratic_form(&state.embedding, other.consensus()?)?;
            }
        }
    }
    Ok(total)
}

/// What one sweep did.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Joint objective after the update, against the frozen consensus set.
    pub objective: f64,
    /// Per view, `tr(U M_v Uᵀ)` of the embedding before the update.
    pub subproblem_before: Vec<f64>,
    /// Same quantity for the updated embedding.
    pub subproblem_after: Vec<f64>,
}

/// Stepwise driver behind [`fit`].
#[derive(Debug, Clone)]
pub struct Solver {
    inputs: Vec<Matrix>,
    states: Vec<ViewState>,
    config: FitConfig,
    consensus_current: bool,
}

impl Solver {
    /// Preprocesses every view, builds its LLE graph and initial embedding,
    /// and constructs the consensus matrices for that embedding.
    pub fn new(dataset: &MultiViewDataset, config: &FitConfig) -> Result<Self> {
        config.validate(dataset.n_samples(), dataset.n_views())?;
        let inputs: Vec<Matrix> = match config.preprocess {
            Preprocess::None => dataset.views().to_vec(),
            Preprocess::Zscore => dataset.views().iter().map(zscore).collect(),
        };
        let states = inputs
            .par_iter()
            .enumerate()
            .map(|(v, x)| ViewState::initialize(x, config.dim(v), config))
            .collect::<Result<Vec<_>>>()?;
        let mut solver = Self {
            inputs,
            states,
            config: config.clone(),
            consensus_current: false,
        };
        solver.refresh_all()?;
        Ok(solver)
    }

    pub fn states(&self) -> &[ViewState] {
        &self.states
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    /// Preprocessed `N × D` inputs, one per view.
    pub fn inputs(&self) -> &[Matrix] {
        &self.inputs
    }

    pub fn objective(&self) -> Result<f64> {
        objective(&self.states, self.config.lambda_c)
    }

    fn refresh_all(&mut self) -> Result<()> {
        if self.consensus_current {
            return Ok(());
        }
        let config = &self.config;
        self.states
            .par_iter_mut()
            .zip(self.inputs.par_iter())
            .try_for_each(|(state, input)| refresh_consensus(state, input, config))?;
        self.consensus_current = true;
        Ok(())
    }

    /// One refresh-then-update pass over all views.
    pub fn sweep(&mut self) -> Result<SweepReport> {
        self.refresh_all()?;
        let states = &self.states;
        let config = &self.config;
        let updates = (0..states.len())
            .into_par_iter()
            .map(|v| {
                let m = frozen_subproblem(states, v, config.lambda_c)?;
                let before = quadratic_form(&states[v].embedding, &m)?;
                let u = init_view(&m, states[v].dim(), config.skip_trivial)?;
                let after = quadratic_form(&u, &m)?;
                Ok((u, before, after))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut subproblem_before = Vec::with_capacity(updates.len());
        let mut subproblem_after = Vec::with_capacity(updates.len());
        for (state, (u, before, after)) in self.states.iter_mut().zip(updates) {
            state.embedding = u;
            subproblem_before.push(before);
            subproblem_after.push(after);
        }
        let objective = self.objective()?;
        self.consensus_current = self.config.variant.source == ConsensusSource::Input;
        Ok(SweepReport {
            objective,
            subproblem_before,
            subproblem_after,
        })
    }

    pub fn into_embeddings(self) -> Vec<Matrix> {
        self.states.into_iter().map(|s| s.embedding).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// One `d^v × N` embedding per view.
    pub embeddings: Vec<Matrix>,
    /// Entry 0 is the post-initialization objective, entry `t` follows sweep `t`.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Aligned with `objective_trace`; entry 0 covers initialization.
    pub wallclock_per_sweep: Vec<Duration>,
}

/// Runs sweeps until the relative objective change drops below `tol` or
/// `max_sweeps` is reached. The change is measured against the objective
/// after the first sweep.
pub fn fit(dataset: &MultiViewDataset, config: &FitConfig) -> Result<FitResult> {
    let started = Instant::now();
    let mut solver = Solver::new(dataset, config)?;
    let initial = solver.objective()?;
    if !initial.is_finite() {
        return Err(Error::NonFiniteObjective { sweep: 0 });
    }
    let mut trace = vec![initial];
    let mut clock = vec![started.elapsed()];
    let mut converged = false;
    for sweep in 1..=config.max_sweeps {
        let t = Instant::now();
        let report = solver.sweep()?;
        clock.push(t.elapsed());
        if !report.objective.is_finite() {
            return Err(Error::NonFiniteObjective { sweep });
        }
        let previous = trace[sweep - 1];
        trace.push(report.objective);
        let scale = trace[1].abs().max(DIVISION_FLOOR);
        if (report.objective - previous).abs() / scale < config.tol {
            converged = true;
            break;
        }
    }
    Ok(FitResult {
        embeddings: solver.into_embeddings(),
        sweeps: trace.len() - 1,
        objective_trace: trace,
        converged,
        wallclock_per_sweep: clock,
    })
}

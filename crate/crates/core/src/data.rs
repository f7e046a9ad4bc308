//! Multi-view datasets: construction, CSV ingestion, splitting and a seeded
//! synthetic generator.
//!
//! Every stochastic routine in this crate draws from [`ChaCha8Rng`] seeded
//! with `seed_from_u64`, and Gaussian draws use `rand_distr::StandardNormal`.
//! Both are platform independent, so a seed fully determines the output.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::Matrix;

/// `N` aligned samples observed under `M` feature views.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewDataset {
    views: Vec<Matrix>,
    labels: Option<Vec<String>>,
    view_names: Vec<String>,
}

impl MultiViewDataset {
    /// Builds a dataset from `N × D^v` view matrices.
    ///
    /// Rejects an empty view list, fewer than two samples, differing row
    /// counts, non-finite entries and a label list whose length is not `N`.
    pub fn new(
        views: Vec<Matrix>,
        labels: Option<Vec<String>>,
        view_names: Vec<String>,
    ) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::param("a dataset needs at least one view"));
        }
        if view_names.len() != views.len() {
            return Err(Error::shape(format!(
                "{} view names for {} views",
                view_names.len(),
                views.len()
            )));
        }
        let n = views[0].nrows();
        for (v, view) in views.iter().enumerate() {
            if view.nrows() != n {
                return Err(Error::RowCountMismatch {
                    first: view_names[0].clone(),
                    first_rows: n,
                    other: view_names[v].clone(),
                    other_rows: view.nrows(),
                });
            }
            if view.ncols() == 0 {
                return Err(Error::param(format!(
                    "view {} has no features",
                    view_names[v]
                )));
            }
            for sample in 0..view.nrows() {
                for feature in 0..view.ncols() {
                    if !view[(sample, feature)].is_finite() {
                        return Err(Error::NonFiniteInput {
                            view: v,
                            sample,
                            feature,
                        });
                    }
                }
            }
        }
        if n < 2 {
            return Err(Error::param(format!(
                "a dataset needs at least 2 samples, got {n}"
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LabelCount {
                    expected: n,
                    found: labels.len(),
                });
            }
        }
        Ok(Self {
            views,
            labels,
            view_names,
        })
    }

    /// Same as [`MultiViewDataset::new`] with names `view_0`, `view_1`, ...
    pub fn from_views(views: Vec<Matrix>, labels: Option<Vec<String>>) -> Result<Self> {
        let names = (0..views.len()).map(|v| format!("view_{v}")).collect();
        Self::new(views, labels, names)
    }

    pub fn n_samples(&self) -> usize {
        self.views[0].nrows()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    pub fn view(&self, v: usize) -> &Matrix {
        &self.views[v]
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn view_names(&self) -> &[String] {
        &self.view_names
    }

    /// Returns a copy with the given views replaced, keeping labels and names.
    pub fn with_views(&self, views: Vec<Matrix>) -> Result<Self> {
        Self::new(views, self.labels.clone(), self.view_names.clone())
    }
}

/// A train/test partition of `0..N`, both sides sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses comma-separated numeric text into a matrix, one row per line.
///
/// Blank lines and lines starting with `#` are ignored. When `has_header` is
/// set the first remaining line is skipped. Row and column numbers in errors
/// are 1-based and count data rows only.
pub fn parse_matrix_csv(text: &str, has_header: bool, path: &Path) -> Result<Matrix> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    if has_header {
        lines.next();
    }
    let mut values = Vec::new();
    let mut ncols = None;
    let mut nrows = 0;
    for (r, line) in lines.enumerate() {
        let mut count = 0;
        for (c, cell) in line.split(',').enumerate() {
            let cell = cell.trim();
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: r + 1,
                column: c + 1,
                cell: cell.to_string(),
            })?;
            values.push(value);
            count += 1;
        }
        match ncols {
            None => ncols = Some(count),
            Some(expected) if expected != count => {
                return Err(Error::RaggedRow {
                    path: path.to_path_buf(),
                    row: r + 1,
                    expected,
                    found: count,
                })
            }
            _ => {}
        }
        nrows += 1;
    }
    Ok(Matrix::from_row_slice(nrows, ncols.unwrap_or(0), &values))
}

pub fn read_matrix_csv(path: &Path, has_header: bool) -> Result<Matrix> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_matrix_csv(&text, has_header, path)
}

/// Writes a matrix as CSV with 17 significant digits per cell.
///
/// `comment` lines are emitted first, each prefixed with `# `.
pub fn write_matrix_csv<W: Write + ?Sized>(
    out: &mut W,
    m: &Matrix,
    comment: Option<&str>,
) -> io::Result<()> {
    if let Some(comment) = comment {
        for line in comment.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.write_all(b",")?;
            }
            write!(out, "{:.16e}", m[(r, c)])?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn write_labels<W: Write + ?Sized>(out: &mut W, labels: &[String]) -> io::Result<()> {
    for label in labels {
        writeln!(out, "{label}")?;
    }
    Ok(())
}

/// Loads one CSV file per view plus an optional label file.
pub fn load_views<P: AsRef<Path>>(
    paths: &[P],
    labels_path: Option<&Path>,
    has_header: bool,
) -> Result<MultiViewDataset> {
    let mut views = Vec::with_capacity(paths.len());
    let mut names = Vec::with_capacity(paths.len());
    for path in paths {
        let path = path.as_ref();
        views.push(read_matrix_csv(path, has_header)?);
        names.push(path.display().to_string());
    }
    let labels = labels_path.map(read_labels).transpose()?;
    MultiViewDataset::new(views, labels, names)
}

fn split_count(size: usize, ratio: f64) -> usize {
    ((ratio * size as f64).round() as usize).clamp(1, size - 1)
}

/// Random train/test split.
///
/// With labels the split is stratified: each class (in order of first
/// appearance) is shuffled and `round(ratio · size)` of its samples,
/// clamped to `[1, size − 1]`, go to the training side. Without labels the
/// whole index range is shuffled and split the same way.
pub fn split(dataset: &MultiViewDataset, train_ratio: f64, seed: u64) -> Result<SplitIndices> {
    split_indices(dataset.n_samples(), dataset.labels(), train_ratio, seed)
}

/// [`split`] on bare sample count and labels.
pub fn split_indices(
    n: usize,
    labels: Option<&[String]>,
    train_ratio: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(Error::param(format!(
            "train ratio must lie in (0, 1), got {train_ratio}"
        )));
    }
    if n < 2 {
        return Err(Error::param("cannot split fewer than 2 samples"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    match labels {
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::LabelCount {
                    expected: n,
                    found: labels.len(),
                });
            }
            let mut order: Vec<&str> = Vec::new();
            let mut members: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, label) in labels.iter().enumerate() {
                members
                    .entry(label.as_str())
                    .or_insert_with(|| {
                        order.push(label.as_str());
                        Vec::new()
                    })
                    .push(i);
            }
            for label in order {
                let mut idx = members.remove(label).unwrap_or_default();
                if idx.len() < 2 {
                    return Err(Error::param(format!("class {label:?} has a single sample")));
                }
                idx.shuffle(&mut rng);
                let cut = split_count(idx.len(), train_ratio);
                train.extend_from_slice(&idx[..cut]);
                test.extend_from_slice(&idx[cut..]);
            }
        }
        None => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let cut = split_count(n, train_ratio);
            train.extend_from_slice(&idx[..cut]);
            test.extend_from_slice(&idx[cut..]);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Parameters of [`synth_multiview`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub n: usize,
    pub m_views: usize,
    pub classes: usize,
    pub latent_dim: usize,
    pub view_dims: Vec<usize>,
    pub noise_sigma: f64,
    /// Per-view multiplier on `noise_sigma`; all ones when `None`.
    pub noise_scale: Option<Vec<f64>>,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(
        n: usize,
        m_views: usize,
        classes: usize,
        latent_dim: usize,
        view_dims: Vec<usize>,
        noise_sigma: f64,
        seed: u64,
    ) -> Self {
        Self {
            n,
            m_views,
            classes,
            latent_dim,
            view_dims,
            noise_sigma,
            noise_scale: None,
            seed,
        }
    }

    pub fn with_noise_scale(mut self, scale: Vec<f64>) -> Self {
        self.noise_scale = Some(scale);
        self
    }
}

/// Seeded Gaussian-blob generator observed through random linear views.
///
/// Draw order from a single `ChaCha8Rng`: class centers (`classes ×
/// latent_dim`, standard normal times 4), latent points (center plus
/// standard normal, sample `i` in class `i mod classes`), then per view the
/// `latent_dim × D^v` map followed by the `N × D^v` additive noise. Labels
/// are `c0`, `c1`, ...
pub fn synth_multiview(params: &SynthParams) -> Result<MultiViewDataset> {
    let SynthParams {
        n,
        m_views,
        classes,
        latent_dim,
        ref view_dims,
        noise_sigma,
        ref noise_scale,
        seed,
    } = *params;
    if classes == 0 || m_views == 0 || latent_dim == 0 {
        return Err(Error::param(
            "classes, views and latent_dim must be positive",
        ));
    }
    if n < 2 * classes {
        return Err(Error::param(format!(
            "need at least {} samples for {classes} classes",
            2 * classes
        )));
    }
    if view_dims.len() != m_views || view_dims.contains(&0) {
        return Err(Error::param(
            "view_dims must list one positive width per view",
        ));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::param("noise_sigma must be finite and non-negative"));
    }
    let scale = match noise_scale {
        Some(s) if s.len() != m_views || s.iter().any(|x| !(*x >= 0.0 && x.is_finite())) => {
            return Err(Error::param(
                "noise_scale must list one non-negative factor per view",
            ))
        }
        Some(s) => s.clone(),
        None => vec![1.0; m_views],
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };

    let centers = Matrix::from_fn(classes, latent_dim, |_, _| 4.0 * normal());
    let latent = Matrix::from_fn(n, latent_dim, |i, j| centers[(i % classes, j)] + normal());
    let mut views = Vec::with_capacity(m_views);
    for (v, &dim) in view_dims.iter().enumerate() {
        let map = Matrix::from_fn(latent_dim, dim, |_, _| normal());
        let sigma = noise_sigma * scale[v];
        let noise = Matrix::from_fn(n, dim, |_, _| sigma * normal());
        views.push(&latent * map + noise);
    }
    let labels = (0..n).map(|i| format!("c{}", i % classes)).collect();
    MultiViewDataset::from_views(views, Some(labels))
}

/// Standardizes every feature column to zero mean and unit population
/// variance. Constant columns are centered only.
pub fn zscore(x: &Matrix) -> Matrix {
    let n = x.nrows() as f64;
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sd = var.sqrt();
        for v in col.iter_mut() {
            *v -= mean;
            if sd > 0.0 {
                *v /= sd;
            }
        }
    }
    out
}

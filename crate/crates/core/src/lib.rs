//! Multi-view locally linear embedding with graph-consensus co-regularization.
//!
//! Each view contributes an LLE reconstruction graph that shapes its own
//! embedding, while similarity graphs built on the other views' embeddings
//! pull the views toward a shared neighbourhood structure. The joint problem
//! is solved by alternating eigendecompositions, one view at a time.
//!
//! Matrix conventions used throughout the crate:
//!
//! * view matrices are `N × D` (rows are samples, columns are features);
//! * embeddings are `d × N` with orthonormal rows (columns are samples);
//! * graph and consensus matrices are dense `N × N`.
//!
//! ```
//! use mvlle::data::{synth_multiview, SynthParams};
//! use mvlle::solver::{fit, FitConfig};
//!
//! let data = synth_multiview(&SynthParams::new(40, 2, 2, 2, vec![4, 6], 0.1, 1)).unwrap();
//! let result = fit(&data, &FitConfig::new(vec![2, 2])).unwrap();
//! assert_eq!(result.embeddings[0].shape(), (2, 40));
//! ```

pub mod data;
pub mod error;
pub mod eval;
pub mod graphs;
pub mod solver;

pub use data::{MultiViewDataset, SplitIndices};
pub use error::{Error, Result};

pub use eval::{ClassificationReport, Metric, RetrievalReport};
pub use graphs::{
    ConsensusKind, ConsensusSource, ConsensusVariant, KernelSpec, NeighborGraph, WeightMatrix,
};
pub use solver::{FitConfig, FitResult, Preprocess, ViewState};

/// Dense matrix type used by every module.
pub type Matrix = nalgebra::DMatrix<f64>;

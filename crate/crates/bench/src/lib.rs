//! Shared fixtures for the criterion benches.

use mvlle::data::{synth_multiview, SynthParams};
use mvlle::{FitConfig, MultiViewDataset};

/// Three-view synthetic dataset with `n` samples.
pub fn dataset(n: usize) -> MultiViewDataset {
    synth_multiview(&SynthParams::new(n, 3, 4, 3, vec![8, 12, 16], 0.3, 1))
        .expect("valid synthetic parameters")
}

/// Default configuration with five dimensions per view.
pub fn config() -> FitConfig {
    FitConfig::new(vec![5])
}

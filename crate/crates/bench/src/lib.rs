//! Shared fixtures for the criterion benchmarks.

use mrplab::{sample_ensemble, PathEnsemble, Preset};

pub const BENCH_SEED: u64 = 11;

/// An ensemble of `n` paths on `[0, 4]` from a preset model.
pub fn fixture(preset: Preset, n: usize) -> PathEnsemble {
    sample_ensemble(&preset.model(), n, 4.0, BENCH_SEED).expect("preset models simulate")
}

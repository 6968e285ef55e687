//! The four reproduction pipelines behind the `popeb` binary.
//!
//! Each experiment exposes a `compute` function returning plain result rows
//! (used directly by the acceptance suite) and a `run` function that
//! computes and writes CSV artifacts. Seeds evaluate independently and in
//! parallel; rows are always written in seed order, and wall-clock timings
//! go to separate `*_timing.csv` files so that every other artifact is
//! byte-identical across reruns of the same configuration.

pub mod blr;
pub mod gamma_poisson;
pub mod gmm;
pub mod lda;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;

// Substream ids, fixed across the crate so runs are reproducible.
pub(crate) const STREAM_DATA: u64 = 1;
pub(crate) const STREAM_TEST: u64 = 2;
pub(crate) const STREAM_CANDIDATES: u64 = 3;
pub(crate) const STREAM_SPLIT: u64 = 4;
pub(crate) const STREAM_INIT: u64 = 5;
pub(crate) const STREAM_RUN: u64 = 6;

/// Tag for deriving per-component-count child seeds.
pub(crate) fn k_tag(k: usize) -> u64 {
    0x6B00 + k as u64
}

/// Runs the configured experiment and writes its artifacts under
/// `config.out_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::GammaPoisson => gamma_poisson::run(config),
        ExperimentKind::Blr => blr::run(config),
        ExperimentKind::Gmm => gmm::run(config),
        ExperimentKind::Lda => lda::run(config),
    }
}

/// Shortest round-trip float formatting; identical values give identical
/// bytes.
pub(crate) fn fmt(v: f64) -> String {
    format!("{v}")
}

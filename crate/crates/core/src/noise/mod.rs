//! Noise realizations `J(t)` and ensemble averages of the echo and purity.

pub mod ensemble;
pub mod process;
pub mod stats;

pub use ensemble::{
    inequality_margin, run_echo_ensemble, run_echo_ensemble_with, run_master_echo, Checkpoint, EnsembleOptions,
    InequalityMargin,
};
pub use process::{realization_rng, sample_realization, NoiseKernel, NoiseProcess, NoiseSeries};
pub use stats::RunningStats;

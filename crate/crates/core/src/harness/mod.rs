//! Config-driven Monte-Carlo sweeps over SNR and analog architectures.

mod config;
mod output;
mod seed;
mod stats;
mod sweep;

pub use config::{parse_config, parse_config_str, Baselines, ExperimentConfig};
pub use output::{manifest_path, read_results, write_results, Manifest, CSV_HEADER};
pub use seed::{derive_seed, splitmix64, trial_seed};
pub use stats::{ExactSum, RunningStats};
pub use sweep::{
    run_sweep, run_trial, ResultRow, Series, SeriesOutcome, SweepResult, TrialOutcome,
};

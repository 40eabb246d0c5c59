//! Experiment grids over (process, parameter, trial), persistence of the
//! records and convergence-rate fitting.

mod config;
mod experiment;
mod fit;

pub use config::{ExperimentConfig, ProcessId, SmoothingConfig, TransportConfig};
pub use experiment::{
    read_records, run_experiment, sample_process, run_experiment_with, write_records, write_summary, ExperimentRecord, RunOptions,
};
pub use fit::{fit_rate, RateFit, RateModel};

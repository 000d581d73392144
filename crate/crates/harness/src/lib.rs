//! Experiment harness for the pilot design library: configuration, baseline
//! designs, Monte Carlo oracles, the trial runner and its CSV output.

pub mod baselines;
pub mod config;
pub mod experiment;
pub mod oracle;
pub mod validate;

pub use config::{Algorithm, ConfigError, ExperimentSpec};
pub use experiment::{run_experiment, run_trials, HarnessError};

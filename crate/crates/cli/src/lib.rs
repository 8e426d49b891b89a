//! Command-line harness for the joint frequency-reuse/caching library:
//! configuration parsing, experiment runners, and CSV emission.

pub mod config;
pub mod harness;

pub use config::{
    apply_overrides, load_config, parse_config_text, CliError, ExperimentConfig, Overrides,
    SweepAxis, SweepRange,
};
pub use harness::{
    compare_approximation, run_analytic, run_optimize, run_simulate, run_sweep, RunOutput,
    COMPARE_HEADER, SWEEP_HEADER,
};

//! Configuration-driven experiments and their result files.
//!
//! A run reads an [`ExperimentConfig`] (TOML, unknown keys rejected), produces a
//! [`ResultTable`] and writes it with [`emit_results`] as CSV plus a JSON
//! manifest echoing the config.

pub mod config;
pub mod initial_data;
pub mod runners;
pub mod table;

pub use config::{
    load_config, parse_config, parse_config_str, BenchmarkConfig, ExperimentConfig, ExperimentKind, GridConfig,
    ParamsConfig, ToyConfig,
};
pub use initial_data::{DataFamily, InitialData};
pub use runners::{
    run_benchmark_cost, run_convergence_lambda, run_experiment, run_preparedness_sweep, run_single_run,
    run_toy_demo,
};
pub use table::{
    emit_results, fit_loglog_slope, read_manifest, Cell, FieldSnapshot, Manifest, ResultTable, SlopeFit,
    SCHEMA_VERSION,
};

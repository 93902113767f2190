//! Experiment driver: sweeps, report tables, configuration files and the CLI.

mod cli;
mod config;
mod sweep;
mod table;

pub use sweep::{
    boundary_two_scale_check, convergence_columns, convergence_errors, run_convergence_sweep,
    run_penalty_and_delta_sweeps, ConvergenceErrors, ConvergenceSweep, PenaltyDeltaSweep, SweepSpec, TwoScale,
};
pub use cli::cli_main;
pub use config::{keys_help, load_config, parse_config, RunConfig, KEYS};
pub use table::ReportTable;

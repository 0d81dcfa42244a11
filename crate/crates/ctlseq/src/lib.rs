//! Command-line front end for `ctlseq-core`: INI run configurations, solution
//! JSON and CSV emitters, a parallel Monte Carlo driver and the figure data
//! of the quadratic-cost example.

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod output;
pub mod runner;

pub use crate::commands::{cmd_figures, cmd_simulate, cmd_solve, cmd_stats, Overrides};
pub use crate::config::{Format, RunConfig};
pub use crate::error::CliError;
pub use crate::runner::run_paths_parallel;

//! Experiment driver around `shadownet-core`: JSON configs with CLI
//! overrides, deterministic per-command reports (JSON plus CSV tables),
//! and a fixed binary format for weight persistence.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod weights;

pub use commands::run_command;
pub use config::{parse_config, CliOverrides, CommandName, RunConfig};
pub use error::{CliError, Result};
pub use report::{write_report, Report};
pub use weights::{load_weights, save_weights};

//! Experiment harness around `ticktock-core`: single games, exact curves,
//! continuity reports and reproducible parameter sweeps.

pub mod app;
pub mod config;
pub mod error;
pub mod schema;
pub mod strategy;
pub mod sweep;

pub use app::{execute, main_with_args, Cli, Command};
pub use config::SweepConfig;
pub use error::{CliError, Result};
pub use schema::{parse_sweep_csv, SweepRow, HEADER};
pub use strategy::{build_pair, ClockParams, Strategy};
pub use sweep::{grid_seed, run_sweep, SweepOutcome};

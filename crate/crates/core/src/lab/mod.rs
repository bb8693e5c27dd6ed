//! Experiment orchestration behind the `idla-lab` binary.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, Command};
pub use config::Config;
pub use report::{Gate, Outcome};

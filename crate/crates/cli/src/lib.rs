//! Configuration, commands and result files of the `pvsize` tool.

pub mod commands;
pub mod config;

pub use commands::{cmd_compare, cmd_optimize, cmd_synth, cmd_verify, Overrides, SynthArgs};
pub use config::ScenarioConfig;

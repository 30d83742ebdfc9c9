//! Library side of the `ngpc` command-line tool: configs, commands, the
//! encoded-feature file format and the `verify` oracle suite.

pub mod commands;
pub mod config;
pub mod features;
pub mod verify;

pub use commands::{run, Command, Outcome, RunSpec};

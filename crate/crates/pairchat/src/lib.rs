//! Command-line driver for `pairchat-core`: scenario configuration, the
//! `theory` / `simulate` / `compare` / `sweep` / `defense` commands, and
//! CSV/JSON trace export.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Format, ModeName, ScenarioConfig};
pub use error::CliError;

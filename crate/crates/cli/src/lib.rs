//! Experiment harness for the hail simulator: configuration, subcommand
//! dispatch, CSV and manifest output, and the oracle suite.

pub mod config;
pub mod oracle;
pub mod output;
pub mod run;

pub use config::{parse_config, Config, ConfigErrors, FieldError};
pub use run::{run, RunError, RunOptions, RunOutcome, Subcommand};

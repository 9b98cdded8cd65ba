//! Command-line front end: scenario runs, vision evaluation and reports.

pub mod app;
pub mod output;
pub mod scenario;
pub mod svg;
pub mod vision_eval;

use thiserror::Error;

pub use app::{execute, run_scenario, Cli, Command};
pub use scenario::ScenarioFile;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    /// Bad input: unreadable or malformed files, invalid parameters.
    #[error("{0}")]
    Validation(String),
    /// The inputs were fine but the session failed or did not finish.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book {}

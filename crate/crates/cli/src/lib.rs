//! Command-line frontend for `fedsurv`.
//!
//! The binary is a thin wrapper around [`run`], which returns what would be
//! printed so that the commands can be driven from tests.

pub mod args;
pub mod commands;
pub mod output;

pub use args::{Cli, Command};
pub use output::RunManifest;

/// Text for stdout and warnings for stderr.
pub struct Outcome {
    pub stdout: String,
    pub warnings: Vec<String>,
}

/// Executes one parsed invocation. `argv` is recorded in run manifests.
pub fn run(cli: Cli, argv: &[String]) -> anyhow::Result<Outcome> {
    let (stdout, warnings) = match cli.command {
        Command::Summary(a) => (commands::summary(a)?, Vec::new()),
        Command::Split(a) => (commands::split_cmd(a, argv)?, Vec::new()),
        Command::Km(a) => commands::km(a, argv)?,
        Command::Heterogeneity(a) => commands::heterogeneity(a, argv)?,
    };
    Ok(Outcome { stdout, warnings })
}

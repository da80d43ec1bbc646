//! Command-line front end: argument handling, config files and report
//! rendering for `bellsim`.

pub mod args;
pub mod commands;
pub mod config;
pub mod format;
pub mod report;

use clap::{CommandFactory, Parser};
use thiserror::Error;

use crate::args::{Cli, Command};
use crate::commands::CommandOutput;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SELF_CHECK: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Invalid(#[from] bellsim_core::Error),
}

/// Rendered report, error text and exit code of one invocation. Progress
/// notes go straight to the process stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn execute(cli: &Cli) -> Result<CommandOutput, CliError> {
    match &cli.command {
        Command::Analytic(a) => commands::cmd_analytic(a),
        Command::Simulate(s) => commands::cmd_simulate(s),
        Command::Coin(c) => commands::cmd_coin(c),
        Command::Loopholes { command } => commands::cmd_loopholes(command),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_cli<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let usage = |msg: String| CliOutput {
        stdout: String::new(),
        stderr: format!("error: {msg}\n"),
        code: EXIT_USAGE,
    };
    let args = match config::merge(&Cli::command(), args) {
        Ok(a) => a,
        Err(e) => return usage(e.to_string()),
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput { stdout: String::new(), stderr: text, code }
            } else {
                CliOutput { stdout: text, stderr: String::new(), code }
            };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let stdout = out.report.render(cli.format);
            if out.self_check_passed {
                CliOutput { stdout, stderr: String::new(), code: EXIT_OK }
            } else {
                CliOutput {
                    stdout,
                    stderr: format!("error: self-check failed: a z-score exceeds {}\n", commands::Z_LIMIT),
                    code: EXIT_SELF_CHECK,
                }
            }
        }
        Err(e) => usage(e.to_string()),
    }
}

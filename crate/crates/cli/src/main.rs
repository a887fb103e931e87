//! `stiffsense`: run, classify, sweep, verify and reproduce flame-model experiments.
//!
//! Exit codes: 0 success, 1 a verification bound was missed, 2 invalid input,
//! 3 the simulation overflowed.

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<stiffsense_core::Error> for CliError {
    fn from(e: stiffsense_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    BoundFailed = 1,
    Invalid = 2,
    Overflow = 3,
}

fn run(cli: Cli) -> Result<ExitStatus, CliError> {
    match cli.command {
        Command::Simulate { run, out_dir } => commands::simulate_cmd(&run, &out_dir),
        Command::Classify { run } => commands::classify_cmd(&run),
        Command::Sweep { run, dt_min, dt_max, dt_count, dt_list, output } => {
            let grid = commands::sweep_grid(dt_min, dt_max, dt_count, dt_list.as_deref())?;
            commands::sweep_cmd(&run, &grid, &output)
        }
        Command::Verify { run, tol_fd, tol_adjoint, h_rel } => {
            commands::verify_cmd(&run, tol_fd, tol_adjoint, h_rel)
        }
        Command::Reproduce { case, out_dir } => commands::reproduce_cmd(case, &out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let status = run(cli).unwrap_or_else(|e| {
        eprintln!("stiffsense: {e}");
        ExitStatus::Invalid
    });
    ExitCode::from(status as u8)
}

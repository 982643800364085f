//! Command-line front end: file ingestion, subcommands and output writers.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a, cli.verbose).map(drop),
        Command::Blv(a) => commands::cmd_blv(a, cli.verbose).map(drop),
        Command::Simulate(a) => commands::cmd_simulate(a, cli.verbose).map(drop),
        Command::Diagnose(a) => commands::cmd_diagnose(a, cli.verbose).map(drop),
    }
}

/// Runs the program on `argv` (including the program name) and returns the
/// process exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let argv = match config::expand_config_args(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}", e.report());
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                print!("{e}");
                return 0;
            }
            _ => {
                let text = e.to_string();
                let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
                eprintln!("error[VALIDATION]: {}", first.trim_start_matches("error: "));
                return 2;
            }
        },
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.report());
            e.exit_code()
        }
    }
}

mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;
use curvekit_core::Error;

use crate::args::{Cli, Command};

/// Exit statuses: 0 success, 2 bad arguments or input, 3 I/O, 4 a fit or
/// experiment failed.
fn exit_code(err: &Error) -> u8 {
    if err.is_input_error() {
        2
    } else if err.is_io_error() {
        3
    } else {
        4
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Fit(args) => commands::fit(args),
        Command::Experiment(cmd) => commands::experiment(cmd),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

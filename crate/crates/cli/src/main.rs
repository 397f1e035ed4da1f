//! `multiprod` command-line front end.

mod args;
mod config;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::Cli;
use run::CliError;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.jobs {
        Some(0) => Err(CliError::usage("--jobs", "must be at least 1")),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run::execute(&cli.command)),
            Err(e) => Err(CliError::Numerical(format!("cannot start worker pool: {e}"))),
        },
        None => run::execute(&cli.command),
    };
    let text = match result {
        Ok(text) => text,
        Err(CliError::Usage { flag, msg }) => {
            Cli::command().error(ErrorKind::InvalidValue, format!("{flag}: {msg}")).exit()
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::from(1)
        }
    }
}

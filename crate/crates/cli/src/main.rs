//! `poolscreen`: tables for every evaluation, matrix tools, traces, and the
//! session server. Exit codes: 0 ok, 1 invalid input, 2 internal failure.

mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Input("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match &cli.command {
        Command::IdentifyEval(args) => commands::identify_eval(args),
        Command::Worstcase(args) => commands::worstcase(args),
        Command::ClassifyEval(args) => commands::classify_eval(args),
        Command::Roc(args) => commands::roc(args),
        Command::Matrix(command) => commands::matrix(command),
        Command::Trace(args) => commands::trace(args),
        Command::Serve(args) => commands::serve(args),
    }
}

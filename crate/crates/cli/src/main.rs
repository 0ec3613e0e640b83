//! `quasibayes` command-line tool.
//!
//! Exit codes: 0 success, 1 validation failure, 2 input or usage error,
//! 3 numerical degeneracy, 4 invalid rule spec.

mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use commands::Failure;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli.command, &cli.global) {
        Ok(report) => {
            if let Err(e) = emit(&cli, &report.text) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(Failure::Validation.exit_code() as u8)
            }
        }
        Err(f) => {
            match &f {
                Failure::Validation => {}
                Failure::Input(m) | Failure::Degenerate(m) | Failure::RuleSpec(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.global.output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

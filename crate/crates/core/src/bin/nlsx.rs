//! Command-line entry point. Exit status: 0 on success, 1 when a run fails or a check does not
//! pass, 2 for usage errors.

use clap::Parser;
use nlsx::cli_io::commands::{execute, Cli};
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(m) if m.passed() => ExitCode::SUCCESS,
        Ok(m) => {
            eprintln!("nlsx {}: {}", m.command, m.failure().unwrap_or_default());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("nlsx: {e}");
            ExitCode::from(1)
        }
    }
}

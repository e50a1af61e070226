use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = selsr::cli::Cli::parse();
    match selsr::cli::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

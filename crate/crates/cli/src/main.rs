use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    swp_cli::cli::run(swp_cli::cli::Cli::parse())
}

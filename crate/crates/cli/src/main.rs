use std::process::ExitCode;

use clap::Parser;
use seirhcd_cli::args::Cli;

fn main() -> ExitCode {
    ExitCode::from(seirhcd_cli::run(Cli::parse()))
}

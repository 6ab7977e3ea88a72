//! The `seirhcd` command-line tool.
//!
//! Every subcommand writes its results plus a `manifest.json` into
//! `--output-dir`. Exit codes: 0 success, 2 configuration error, 3 numerical
//! failure, 4 empty plausible space.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod svg;

use args::{Cli, Command};
use error::CliError;
use manifest::RunContext;

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    if let Some(n) = cli.common.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let mut ctx = match RunContext::new(
        cli.command.name(),
        cli.common.config.clone(),
        cli.common.seed,
        cli.common.output_dir.clone(),
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let c = &cli.common;
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate::run(&mut ctx, c, a),
        Command::Sensitivity(a) => commands::sensitivity::run(&mut ctx, c, a),
        Command::Emulate(a) => commands::emulate::run(&mut ctx, c, a),
        Command::Invert(a) => commands::invert::run(&mut ctx, c, a),
        Command::Synth(a) => commands::synth::run(&mut ctx, c, a),
    };
    let code = match &result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    if matches!(result, Ok(()) | Err(CliError::EmptySpace(_))) {
        if let Err(e) = ctx.finish(code) {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    code
}

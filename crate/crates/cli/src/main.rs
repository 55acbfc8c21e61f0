//! `zkernel`: tables and verification reports for the screened zeta kernel.
//!
//! Exit codes: 0 success, 1 a verification row failed, 2 configuration or
//! I/O error, 3 numerical degeneracy under `--strict`.

mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::commands::Command;
use crate::config::{RunArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "zkernel", version, about)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,

    /// Exit with 3 when a determinant reaches zero or a row is flagged.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.run).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(o) if o.failed => ExitCode::from(1),
        Ok(o) if o.degenerate && cli.strict => ExitCode::from(3),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zkernel: {e}");
            e.exit_code()
        }
    }
}

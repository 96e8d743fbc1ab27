//! `mocon`: command-line harness around `mocon-core`.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for
//! numerical failures and output errors. Logging goes to stderr and is
//! controlled by `MOCON_LOG` (default `warn`).

// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod output;
mod spec;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Resolve};
use error::CliResult;

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(a) => commands::simulate(a.resolve()?),
        Command::Geometry(a) => commands::geometry(a.resolve()?),
        Command::Stability(a) => commands::stability(a.resolve()?),
        Command::Reparam(a) => commands::reparam(a.resolve()?),
        Command::Catalog(a) => commands::catalog(a.resolve()?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MOCON_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

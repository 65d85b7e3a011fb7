//! `extrabal` command-line interface.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 data error
//! (missing or malformed files, validation failures), 3 numerical failure
//! (singular systems, divergent fits, non-finite objectives).

mod args;
mod commands;
mod manifest;

use clap::Parser;
use extrabal::error::Error;

use crate::args::{Cli, Command, FileConfig};

const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => EXIT_USAGE,
        Error::Io(_)
        | Error::Csv(_)
        | Error::EmptyInput(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFinite { .. } => EXIT_DATA,
        Error::SingularSystem
        | Error::PerfectSeparation { .. }
        | Error::SingleClass
        | Error::NonFiniteObjective { .. }
        | Error::AllZeroWeights
        | Error::TooFewUnits(_)
        | Error::EstimatorFailure { .. } => EXIT_NUMERICAL,
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(
        match level {
            log::LevelFilter::Warn => "warn",
            log::LevelFilter::Info => "info",
            _ => "debug",
        },
    ))
    .format_timestamp(None)
    .init();
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are surfaced as "errors" by clap but are not
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    init_logging(cli.verbose);

    let run = || -> extrabal::error::Result<()> {
        let file = FileConfig::load(cli.config.as_deref())?;
        match &cli.command {
            Command::Solve(args) => commands::run_solve(args, &file),
            Command::Sweep(args) => commands::run_sweep(args, &file),
            Command::Baselines(args) => commands::run_baselines(args, &file),
            Command::Bound(args) => commands::run_bound(args, &file),
            Command::Diagnose(args) => commands::run_diagnose(args, &file),
            Command::Simulate(args) => commands::run_simulate(args, &file),
        }
    };
    if let Err(err) = run() {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

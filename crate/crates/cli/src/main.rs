mod cli;
mod commands;
mod inputs;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use damteval::{Error, Result};

use crate::cli::{Cli, Command};

/// Caps the worker count; 0 or unset means one worker per core.
const THREADS_ENV: &str = "DAMTEVAL_THREADS";

fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("{THREADS_ENV}={v:?} is not a worker count")))?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Score(a) => commands::score(a),
        Command::Correlate(a) => commands::correlate_cmd(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Difficulty(a) => commands::difficulty(a),
        Command::RankReport(a) => commands::rank_report_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            eprint!("ERROR UsageError: {e}");
            return ExitCode::from(2);
        }
    };
    match thread_pool().and_then(|pool| pool.install(|| run(&cli))) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ERROR {}: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}

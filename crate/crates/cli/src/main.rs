mod cli;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use ppmrx_core::Error;

use crate::cli::{Cli, Command, LutCommand};
use crate::config::FileConfig;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Capacity(_) => 3,
        Error::Diagnostic(_) => 4,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
    }
}

fn run(cli: Cli) -> ppmrx_core::Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    }
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Stats(a) => commands::stats(a, &file),
        Command::Bounds(a) => commands::bounds(a, &file),
        Command::Exact(a) => commands::exact(a, &file),
        Command::Optimal(a) => commands::optimal(a, &file),
        Command::Simulate(a) => commands::simulate_cmd(a, &file),
        Command::Sweep(a) => commands::sweep(a, &file),
        Command::Lut(LutCommand::Build(a)) => commands::lut_build(a, &file),
        Command::Lut(LutCommand::Query(a)) => commands::lut_query(a),
        Command::Fit(a) => commands::fit(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ppmrx: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

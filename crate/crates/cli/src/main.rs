mod args;
mod commands;
mod error;
mod grid;
mod output;
mod state;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    match &cli.command {
        Command::RateCurve(a) => {
            set_threads(a.run.threads)?;
            commands::rate_curve_cmd(a, argv)
        }
        Command::Classical(a) => {
            set_threads(a.run.threads)?;
            commands::classical_cmd(a, argv)
        }
        Command::Verify(a) => {
            set_threads(a.threads)?;
            commands::verify_cmd(a)
        }
        Command::ChannelInfo(a) => commands::channel_info_cmd(a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    init_logging(cli.verbose);
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qib: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

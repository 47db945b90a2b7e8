mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    // Builder::new() ignores RUST_LOG: the thread count is the only
    // environment setting we honour.
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .init();

    let threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(1);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: cannot start thread pool: {e}");
        return ExitCode::from(2);
    }

    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Ranks(a) => commands::ranks(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Fit(a) => commands::fit(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
        Command::Study(a) => commands::study(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\nRun `stdf --help` for usage.");
            ExitCode::from(1)
        }
        Err(CliError::Run(e)) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}

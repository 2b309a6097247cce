//! `snm`: command-line front end for the structured normal means toolkit.

mod commands;
mod error;
mod output;
mod spec;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "snm",
    version,
    about = "Minimax bounds, MLE risk and sensing design for structured normal means",
    after_help = "Family specs are JSON, inline or in a file, e.g.\n  \
        {\"kind\":\"ksets\",\"d\":8,\"k\":2}   {\"kind\":\"biclusters\",\"d\":4,\"k\":1}   {\"kind\":\"cbm\",\"n\":8,\"m\":4}\n  \
        {\"kind\":\"stars\",\"ba\":{\"n\":13,\"attach\":3,\"core\":5,\"seed\":7}}   {\"kind\":\"stars\",\"path\":4}\n  \
        {\"kind\":\"explicit\",\"vectors\":[[0,0],[2,0]]}\n\n\
        SNM_THREADS caps the worker threads. Exit codes: 0 ok, 1 I/O error, 2 invalid input,\n\
        3 capability refusal (family too large), 4 optimizer inconclusive."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Summarize a family: dimension, hypothesis count, distance spectra.
    Family(commands::FamilyArgs),
    /// EDF bounds, lower-bound verdict, min-distance bound and closed-form rates.
    #[command(after_help = commands::BOUNDS_COLUMNS)]
    Bounds(commands::BoundsArgs),
    /// Optimize a sensing design and certify stationarity.
    #[command(after_help = commands::DESIGN_COLUMNS)]
    Design(commands::DesignArgs),
    /// Monte Carlo MLE risk over a signal-strength grid.
    #[command(after_help = commands::SIMULATE_COLUMNS)]
    Simulate(commands::SimulateArgs),
    /// Two-phase adaptive bicluster recovery.
    #[command(after_help = commands::ADAPTIVE_COLUMNS)]
    Adaptive(commands::AdaptiveArgs),
    /// Optimized vs uniform sensing for stars on a preferential-attachment graph.
    #[command(after_help = commands::STARS_COLUMNS)]
    Stars(commands::StarsArgs),
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("SNM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::usage(format!("SNM_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Family(a) => commands::family(a),
        Command::Bounds(a) => commands::bounds(a),
        Command::Design(a) => commands::design(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Adaptive(a) => commands::adaptive(a),
        Command::Stars(a) => commands::stars(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // output piped into e.g. `head`
        Err(CliError::Snm(snm::SnmError::Io(e))) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("snm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

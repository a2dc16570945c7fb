//! `sffda`: synthesize, extract, train, evaluate, screen and report.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod cmd;
mod config;
mod model;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::UsageError;

#[derive(Parser)]
#[command(name = "sffda", version, about = "Noncontact anxiety screening pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic two-class dataset.
    Synth(cmd::synth::Args),
    /// Compute per-stream features for every manifest sample into a cache.
    Extract(cmd::extract::Args),
    /// Balance, split 8:2 and train the twin network.
    Train(cmd::train::Args),
    /// Metrics and ROC of a trained model on one split.
    Eval(cmd::eval::Args),
    /// Verdict for one sample against the anxiety-free references.
    Screen(cmd::screen::Args),
    /// Loss history, metrics and per-stream importance in one file.
    Report(cmd::report::Args),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    config::init_threads()?;
    match cli.command {
        Command::Synth(a) => cmd::synth::run(a),
        Command::Extract(a) => cmd::extract::run(a),
        Command::Train(a) => cmd::train::run(a),
        Command::Eval(a) => cmd::eval::run(a),
        Command::Screen(a) => cmd::screen::run(a),
        Command::Report(a) => cmd::report::run(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

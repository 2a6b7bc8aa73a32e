//! `cvstego` — coverless video steganography toolkit.
//!
//! Secrets are never embedded: the sender indexes an ordinary video
//! collection by per-block perceptual hashes, picks blocks whose hashes
//! already spell the secret, and ships only a sealed list of their
//! locations. This binary wraps that pipeline: `index`, `hide`, `extract`,
//! `attack` (robustness trials), `evaluate` (measurements), `demo`, and
//! `sample`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable inputs,
//! failed authentication). With `--json`, stdout carries exactly one
//! summary object shaped by `schema/run-summary.schema.json`.

mod commands;
mod config;
mod error;
mod summary;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use commands::{attack, demo, evaluate, extract, hide, index, sample};

use error::CliError;
use std::path::PathBuf;
use std::process::ExitCode;
use summary::{RunSummary, Ui};

#[derive(Debug, Parser)]
#[command(
    name = "cvstego",
    version,
    about = "Coverless video steganography: carrier selection over unmodified videos"
)]
struct Cli {
    /// Print one machine-readable JSON summary on stdout
    #[arg(long, global = true)]
    json: bool,
    /// Cap the worker thread pool (default: all cores; also `threads` in
    /// the config file)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    /// TOML settings file (also via CVSTEGO_CONFIG)
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build, audit, or inspect a carrier index
    #[command(subcommand)]
    Index(index::IndexCommand),
    /// Select carrier blocks for a secret and seal the location payload
    Hide(hide::HideArgs),
    /// Recover a secret from received videos
    Extract(extract::ExtractArgs),
    /// Re-render videos through a channel distortion
    Attack(attack::AttackArgs),
    /// Measure capacity, robustness, or the DC change-rate model
    #[command(subcommand)]
    Evaluate(evaluate::EvaluateCommand),
    /// Run index -> hide -> attack -> extract end to end and report
    Demo(demo::DemoArgs),
    /// Write the bundled synthetic sample clips
    Sample(sample::SampleArgs),
}

impl Command {
    /// Stable name used in summaries, including failure summaries.
    fn name(&self) -> &'static str {
        match self {
            Command::Index(index::IndexCommand::Build(_)) => "index-build",
            Command::Index(index::IndexCommand::Audit(_)) => "index-audit",
            Command::Index(index::IndexCommand::Stats(_)) => "index-stats",
            Command::Hide(_) => "hide",
            Command::Extract(_) => "extract",
            Command::Attack(_) => "attack",
            Command::Evaluate(evaluate::EvaluateCommand::Accuracy(_)) => "evaluate-accuracy",
            Command::Evaluate(evaluate::EvaluateCommand::Capacity(_)) => "evaluate-capacity",
            Command::Evaluate(evaluate::EvaluateCommand::Model(_)) => "evaluate-model",
            Command::Demo(_) => "demo",
            Command::Sample(_) => "sample",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; anything else is a
            // usage error, exit 1.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let ui = Ui { json: cli.json };
    let name = cli.command.name();
    match run(&cli, &ui) {
        Ok(summary) => {
            if cli.json {
                println!("{}", serde_json::to_string(&summary).expect("summaries serialize"));
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            if cli.json {
                let failed = RunSummary::failed(name, e.message());
                println!("{}", serde_json::to_string(&failed).expect("summaries serialize"));
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli, ui: &Ui) -> Result<RunSummary, CliError> {
    let file_config = config::load_file_config(cli.config.as_deref())?;
    configure_threads(cli.threads.or(file_config.threads))?;
    match &cli.command {
        Command::Index(index::IndexCommand::Build(args)) => index::build(args, ui),
        Command::Index(index::IndexCommand::Audit(args)) => index::audit(args, ui),
        Command::Index(index::IndexCommand::Stats(args)) => index::stats(args, ui),
        Command::Hide(args) => hide::run(args, &file_config, ui),
        Command::Extract(args) => extract::run(args, &file_config, ui),
        Command::Attack(args) => attack::run(args, ui),
        Command::Evaluate(evaluate::EvaluateCommand::Accuracy(args)) => {
            evaluate::accuracy(args, ui)
        }
        Command::Evaluate(evaluate::EvaluateCommand::Capacity(args)) => {
            evaluate::capacity(args, ui)
        }
        Command::Evaluate(evaluate::EvaluateCommand::Model(args)) => evaluate::model(args, ui),
        Command::Demo(args) => demo::run(args, &file_config, ui),
        Command::Sample(args) => sample::run(args, ui),
    }
}

/// Caps rayon's global pool. A limit of 0 is rejected; no limit keeps the
/// default (all cores).
fn configure_threads(limit: Option<usize>) -> Result<(), CliError> {
    let Some(n) = limit else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

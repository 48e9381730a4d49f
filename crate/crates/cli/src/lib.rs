//! The `fadet` command line.
//!
//! Exit codes: 0 success, 1 validation or protocol error, 2 I/O error.

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub mod args;
mod clean;
pub mod config;
mod evaluate;
mod generate;
mod proposals;
mod report;
mod simulate;

pub use config::CONFIG_DIR_ENV;

#[derive(Debug, Parser)]
#[command(
    name = "fadet",
    version,
    about = "Clean, simulate, label and evaluate fashion attribute detection data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Drop extreme boxes and remove or merge attributes.
    Clean(clean::CleanArgs),
    /// Write a seeded synthetic detection file for a groundtruth.
    Simulate(simulate::SimulateArgs),
    /// Write a seeded synthetic groundtruth with vocabularies.
    Generate(generate::GenerateArgs),
    /// Label anchor proposals and report the effect of person-box pruning.
    LabelProposals(proposals::LabelProposalsArgs),
    /// Score a detection file and write report.json and report.txt.
    Evaluate(evaluate::EvaluateArgs),
    /// Merge machine reports and render them as text.
    Report(report::ReportArgs),
}

pub fn exit_code(err: &fadet_core::Error) -> u8 {
    if err.is_io() {
        2
    } else {
        1
    }
}

pub fn run(cli: Cli) -> fadet_core::Result<()> {
    match cli.command {
        Command::Clean(a) => clean::run(a),
        Command::Simulate(a) => simulate::run(a),
        Command::Generate(a) => generate::run(a),
        Command::LabelProposals(a) => proposals::run(a),
        Command::Evaluate(a) => evaluate::run(a),
        Command::Report(a) => report::run(a),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
/// Usage errors exit 1 like any other validation failure.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

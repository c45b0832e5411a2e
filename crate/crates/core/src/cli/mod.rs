//! Command-line front end: `ingest`, `clean`, `matrix`, `report` and
//! `synth`, driven by a TOML run configuration.
//!
//! Exit codes: 0 success, 1 usage or configuration error (including an
//! excluded method/task combination), 2 data error, 3 solver
//! non-convergence.

pub mod artifacts;
pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
pub use config::{ConfigFile, FlagOverrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "partyline", version, about = "Party and ideology classification from legislative speech")]
pub struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random choice; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for the matrix command; never changes any output.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory for artifacts; overrides the config file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse speeches, group them into senator-sessions and attach ideology scores.
    Ingest,
    /// Clean and stem the corpus; build the vocabulary and count matrix.
    Clean,
    /// Build the train-session × test-session accuracy grids and diagnostics.
    Matrix,
    /// Top-word tables and ideology midpoint baselines.
    Report,
    /// Generate a planted-signal synthetic corpus.
    Synth,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Excluded(_) => EXIT_USAGE,
        Error::NonConvergence(_) => EXIT_NONCONVERGENCE,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::TooManyMalformed { .. }
        | Error::Data(_)
        | Error::DimensionMismatch { .. }
        | Error::Training(_)
        | Error::StaleArtifact { .. }
        | Error::Json(_)
        | Error::Csv(_) => EXIT_DATA,
    }
}

/// Runs one parsed invocation.
pub fn execute(cli: &Cli) -> crate::Result<String> {
    let flags = FlagOverrides {
        seed: cli.seed,
        threads: cli.threads,
        out: cli.out.clone(),
    };
    let cfg = RunConfig::load(cli.config.as_deref(), &flags)?;
    match cli.command {
        Command::Ingest => commands::cmd_ingest(&cfg),
        Command::Clean => commands::cmd_clean(&cfg),
        Command::Matrix => commands::cmd_matrix(&cfg),
        Command::Report => commands::cmd_report(&cfg),
        Command::Synth => commands::cmd_synth(&cfg),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code. Messages go to stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::Excluded("x".into())), 1);
        assert_eq!(exit_code(&Error::Data("x".into())), 2);
        assert_eq!(exit_code(&Error::NonConvergence("x".into())), 3);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["partyline", "frobnicate"]), EXIT_USAGE);
        assert_eq!(run(["partyline", "--help"]), EXIT_OK);
    }
}

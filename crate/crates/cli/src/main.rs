//! `hfs`: posterior curves, conviction windows, fault floors, coin bias and
//! Monte Carlo verification from the command line.
//!
//! Data goes to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 verification mismatch, 2 usage error, 3 invalid model or input,
//! 4 convergence failure, 5 oracle budget exhausted.

mod commands;
mod config;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hidden_failure::Error;

use crate::commands::{AnalyzeArgs, CoinArgs, CryptoArgs, CurveArgs, SanhedrinArgs, VerifyArgs};
use crate::config::OutputFormat;

#[derive(Debug, Parser)]
#[command(name = "hfs", version, about = "Hidden-failure-state posterior analysis")]
struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    output: OutputFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Posterior of the target hypothesis for n = 0..=n_max.
    Curve(CurveArgs),
    /// Peak, limit and confidence ceiling of the unanimous curve.
    Analyze(AnalyzeArgs),
    /// Posterior of guilt for every vote count on a fixed panel.
    Sanhedrin(SanhedrinArgs),
    /// False-acceptance rate of a probabilistic primality test under faults.
    Crypto(CryptoArgs),
    /// Grid posterior for the bias of a coin.
    Coin(CoinArgs),
    /// Compare the analytic posterior with rejection sampling.
    Verify(VerifyArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Model(Error),
    VerificationFailed,
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::VerificationFailed => 1,
            CliError::Usage(_) => 2,
            CliError::Model(Error::Convergence(_)) => 4,
            CliError::Model(Error::InsufficientAcceptance { .. }) => 5,
            CliError::Model(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Curve(args) => commands::curve(&args, cli.output, &mut out),
        Command::Analyze(args) => commands::analyze(&args, cli.output, &mut out),
        Command::Sanhedrin(args) => commands::sanhedrin(&args, cli.output, &mut out),
        Command::Crypto(args) => commands::crypto(&args, cli.output, &mut out),
        Command::Coin(args) => commands::coin(&args, cli.output, &mut out),
        Command::Verify(args) => commands::verify(&args, cli.output, &mut out),
    }?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Model(err) => eprintln!("error: {err}"),
                CliError::VerificationFailed => {
                    eprintln!("verification failed: analytic value outside the oracle tolerance")
                }
                CliError::Io(err) => eprintln!("error: {err}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

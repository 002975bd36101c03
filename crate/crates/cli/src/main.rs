//! `bcset`: extract certified points from Borel–Cantelli sets and verify
//! the certificates.

mod commands;
mod config;
mod error;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Flags;
use error::CliError;

#[derive(Parser)]
#[command(name = "bcset", version, about = "Certified points of Borel–Cantelli sets")]
struct Cli {
    /// Stage bound for certifying seed measures and for each witness search [default: 256].
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    budget_stages: Option<u64>,
    /// Cap on interval pieces per refinement and cells per iterate [default: 100000].
    #[arg(long, global = true, value_parser = parse_pieces)]
    budget_pieces: Option<usize>,
    /// Cap on extraction steps.
    #[arg(long, global = true)]
    budget_steps: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "bcset-out")]
    out: PathBuf,
    /// Modulus provider, `independence` or `paper-ln2`; overrides the job file.
    #[arg(long, global = true)]
    modulus: Option<String>,
    /// Seed of the informational audit run by `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    audit_seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Absolutely normal number from a JSON job.
    Normal { config: PathBuf },
    /// Point typical for finitely many observables of a map.
    Typical { config: PathBuf },
    /// Point with a dense orbit.
    Dense { config: PathBuf },
    /// Integrals against the invariant measure of an expanding map.
    Srb { config: PathBuf },
    /// Point of a built-in sequence, for a fixed number of steps.
    Extract { config: PathBuf },
    /// Replays a certificate.
    Verify { certificate: PathBuf },
}

fn parse_pieces(text: &str) -> Result<usize, String> {
    match text.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let flags = Flags {
        stages: cli.budget_stages,
        pieces: cli.budget_pieces,
        steps: cli.budget_steps,
        modulus: cli.modulus,
    };
    let out = &cli.out;
    match &cli.command {
        Command::Normal { config } => commands::normal(config, &flags, out),
        Command::Typical { config } => commands::typical(config, &flags, out),
        Command::Dense { config } => commands::dense(config, &flags, out),
        Command::Srb { config } => commands::srb(config, &flags, out),
        Command::Extract { config } => commands::extract(config, &flags, out),
        Command::Verify { certificate } => verify::verify(certificate, cli.audit_seed),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

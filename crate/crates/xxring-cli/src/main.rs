//! `xxring`: sample disordered XX rings, build histograms, locate
//! entanglement/nonlocality onsets, and cross-check the pipeline against
//! exact diagonalization.
//!
//! Every run is driven by one TOML config; all randomness derives from the
//! `master-seed` fields in that file, so reruns are bit-reproducible.
//! Exit codes: 0 success, 1 I/O failure, 2 bad configuration, 3 numerical
//! property failure.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "xxring",
    version,
    about = "Random XX-ring entanglement toolkit"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one disorder ensemble; write accumulator, summary, manifest.
    Sample(RunArgs),
    /// Write histogram CSVs, from a fresh run or a saved accumulator.
    Hist(HistArgs),
    /// Scan a disorder grid for the onset of entanglement or nonlocality.
    Threshold(RunArgs),
    /// Largest entangled/nonlocal separation per disorder strength.
    Maxsep(RunArgs),
    /// Cross-check the free-fermion pipeline against exact diagonalization.
    Verify(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Worker threads; overrides XXRING_WORKERS and the config (0 = all cores).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Also write per-pair observables for every realization (sample only).
    #[arg(long)]
    pairs_csv: bool,
    /// Cap the pair sweep at ring distance K; overrides the config.
    #[arg(long, value_name = "K")]
    max_separation: Option<usize>,
}

#[derive(Args)]
struct HistArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Reuse a saved accumulator instead of rerunning the ensemble.
    #[arg(long, value_name = "PATH")]
    from: Option<PathBuf>,
}

/// Failure classes, in exit-code order. Library errors map onto these by
/// kind: bad inputs are configuration, everything the pipeline caught at
/// run time is numerical.
#[derive(Debug)]
enum Failure {
    Io(String),
    Config(String),
    Numerical(String),
}

impl Failure {
    fn exit(&self) -> ExitCode {
        match self {
            Failure::Io(_) => ExitCode::from(1),
            Failure::Config(_) => ExitCode::from(2),
            Failure::Numerical(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

fn is_config_error(e: &xxring::Error) -> bool {
    use xxring::Error::*;
    match e {
        Config(_) | InvalidChain(_) | BadPair { .. } | OracleTooLarge { .. } | Merge(_) => true,
        Realization { source, .. } => is_config_error(source),
        _ => false,
    }
}

impl From<xxring::Error> for Failure {
    fn from(e: xxring::Error) -> Self {
        if is_config_error(&e) {
            Failure::Config(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match &cli.cmd {
        Cmd::Sample(a) | Cmd::Threshold(a) | Cmd::Maxsep(a) | Cmd::Verify(a) => a,
        Cmd::Hist(h) => &h.run,
    };
    let res = config::load(&run.config).and_then(|cfg| match &cli.cmd {
        Cmd::Sample(a) => commands::sample(&cfg, a),
        Cmd::Hist(h) => commands::hist(&cfg, h),
        Cmd::Threshold(a) => commands::threshold(&cfg, a),
        Cmd::Maxsep(a) => commands::maxsep(&cfg, a),
        Cmd::Verify(a) => verify::run(&cfg, a),
    });
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.exit()
        }
    }
}

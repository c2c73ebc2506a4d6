use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ism_cli::config::{parse_config, Mode};
use ism_cli::run::{run, ERROR_STATUS};

/// Incompressible slice model laboratory.
///
/// Exit status: 0 completed, 1 configuration or I/O error, 2 stopped by a
/// monitor, 3 diverged.
#[derive(Parser)]
#[command(name = "ism", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Deterministic simulation, optionally truncated.
    SimDet(Common),
    /// Euler-Maruyama simulation with linear multiplicative noise.
    SimSde(Common),
    /// Simulation through the exponential transform.
    SimTransform(Common),
    /// Monte Carlo hitting frequency of the exponential martingale.
    McHitting(Common),
    /// Monte Carlo global-regularity experiment.
    McGlobal(Common),
    /// Strong convergence study of Euler-Maruyama.
    Convergence(Common),
    /// Diagnostics of the initial state.
    Diag(Common),
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::SimDet(c) => (Mode::SimDet, c),
            Command::SimSde(c) => (Mode::SimSde, c),
            Command::SimTransform(c) => (Mode::SimTransform, c),
            Command::McHitting(c) => (Mode::McHitting, c),
            Command::McGlobal(c) => (Mode::McGlobal, c),
            Command::Convergence(c) => (Mode::Convergence, c),
            Command::Diag(c) => (Mode::Diag, c),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (mode, common) = Cli::parse().command.split();
    let text = match fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(ERROR_STATUS as u8);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", common.config.display());
            return ExitCode::from(ERROR_STATUS as u8);
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    match run(mode, &cfg, &common.out_dir) {
        Ok(outcome) => ExitCode::from(outcome.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(ERROR_STATUS as u8)
        }
    }
}

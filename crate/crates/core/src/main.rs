use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gibbslz::cli::{run, EXIT_CONFIG};
use gibbslz::config::{parse_config_with, Experiment};

#[derive(Parser)]
#[command(name = "gibbslz", version, about = "Quantum Gibbs source simulator and universal entropy estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Base seed (shorthand for `--set seed=N`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample occupation arrays over the observation window.
    Sample,
    /// Exact entropy per unit volume: full space, box and Riemann sums.
    Entropy,
    /// Match-length fields and the uniform bound check.
    Matchlen,
    /// Lempel-Ziv estimate.
    Lz,
    /// Normalised log-probability (AEP) statistic.
    Aep,
    /// Eigenvalue-counting oracle (fermions).
    Eigencount,
    /// Convergence sweep over the configured estimators.
    Sweep,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Sample => Experiment::Sample,
            Command::Entropy => Experiment::Entropy,
            Command::Matchlen => Experiment::Matchlen,
            Command::Lz => Experiment::Lz,
            Command::Aep => Experiment::Aep,
            Command::Eigencount => Experiment::Eigencount,
            Command::Sweep => Experiment::Sweep,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => String::new(),
    };
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    overrides.push(format!("experiment={}", cli.command.experiment()));

    let config = match parse_config_with(&text, &overrides) {
        Ok(c) => c,
        Err(issues) => {
            for i in issues {
                eprintln!("config error: {i}");
            }
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG as u8)
        }
    }
}

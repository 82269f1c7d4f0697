mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kinetic_ga::transport::CostKind;
use kinetic_ga::Error;

/// Exit status for command-line usage errors.
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "kinetic-ga", version, about = "Genetic-algorithm particle systems, exact BL transport and propagation-of-chaos experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the particle system and its coupled nonlinear counterpart.
    Simulate {
        /// Population size; defaults to `trace.n` from the config.
        #[arg(long)]
        n: Option<usize>,
        /// Reference solver, overriding the config.
        #[arg(long, value_parser = ["grid", "ensemble"])]
        reference: Option<String>,
        /// Write the population every this many steps (0 disables).
        #[arg(long, default_value_t = 0)]
        snapshot_stride: usize,
    },
    /// Error against population size.
    RateN,
    /// Error against time step.
    RateTau,
    /// Build the coupling sampler between a reference and a population file.
    CoupleTest {
        reference: PathBuf,
        population: PathBuf,
        #[arg(long, default_value = "truncated")]
        cost: CostKind,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
    },
    /// Optimal transport cost between two measure files.
    Dist {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "truncated")]
        cost: CostKind,
        /// Also write the optimal plan as CSV.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Randomized stability checks.
    Suite {
        #[arg(long, default_value_t = 1000)]
        selection_cases: usize,
        #[arg(long, default_value_t = 10_000)]
        crossover_cases: usize,
    },
}

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Certificate(_) | Error::MassLoss { .. } => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.global.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

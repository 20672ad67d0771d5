mod commands;
mod output;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rankdesign::Error),
    /// A domain failure already rendered with labels.
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_domain() => 2,
            CliError::Domain(_) => 2,
            _ => 1,
        }
    }
}

/// Least-squares ranking and comparison design from pairwise data.
#[derive(Parser)]
#[command(name = "rankdesign", version)]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "RANKDESIGN_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,

    /// Worker threads for Monte Carlo trials (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Least-squares scores and residual histogram for an edge list.
    Rank(commands::RankArgs),
    /// Spend a budget of extra comparisons, greedily or at random.
    Augment(commands::AugmentArgs),
    /// E/A/D/T optimality criteria of an edge list.
    Criteria(commands::CriteriaArgs),
    /// Upper bounds on the algebraic connectivity.
    Bounds(commands::BoundsArgs),
    /// Normalized spectral clustering with CSV and DOT export.
    Cluster(commands::ClusterArgs),
    /// Active-vs-random synthetic experiment from a JSON config.
    Simulate(simulate::SimulateArgs),
    /// Convert a user,item,rating CSV into an edge list.
    IngestRatings(commands::IngestRatingsArgs),
    /// Convert a game schedule CSV into an edge list.
    IngestSchedule(commands::IngestScheduleArgs),
    /// Write a standard graph with synthetic comparisons.
    Generate(commands::GenerateArgs),
    /// Erdős–Rényi ensemble of (m, λ₂).
    Ensemble(commands::EnsembleArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let dir = cli.out_dir.as_path();
    match cli.command {
        Command::Rank(a) => commands::rank(&a, dir),
        Command::Augment(a) => commands::augment(&a, dir),
        Command::Criteria(a) => commands::criteria(&a, dir),
        Command::Bounds(a) => commands::bounds(&a, dir),
        Command::Cluster(a) => commands::cluster(&a, dir),
        Command::Simulate(a) => simulate::simulate(&a, dir),
        Command::IngestRatings(a) => commands::ingest_ratings(&a, dir),
        Command::IngestSchedule(a) => commands::ingest_schedule(&a, dir),
        Command::Generate(a) => commands::generate(&a, dir),
        Command::Ensemble(a) => commands::ensemble(&a, dir),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
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
            ExitCode::from(e.exit_code())
        }
    }
}

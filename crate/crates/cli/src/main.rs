//! `desboves`: rasters, Lyapunov sweeps, Misiurewicz searches and continuity
//! runs for the elementary Desboves family.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid configuration; exit code 2.
    #[error("{0}")]
    Config(String),
    /// A verification or search did not succeed; exit code 1.
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] desboves::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(desboves::Error::DegenerateLambda | desboves::Error::Precondition(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "desboves", version, about = "Numerical laboratory for the elementary Desboves maps of P²")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// key = value file; keys are the long flag names, flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// worker threads (falls back to DESBOVES_THREADS, then all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Escape-time raster of a complex line through P²
    Render(commands::RenderArgs),
    /// Lyapunov function and its discrete Laplacian on a parameter grid
    Sweep(commands::SweepArgs),
    /// Verified Misiurewicz parameters, or the nearest one to a given λ
    Misiurewicz(commands::MisiurewiczArgs),
    /// Hausdorff distances between matched Julia clouds along a dyadic ladder
    Continuity(commands::ContinuityArgs),
    /// Built-in checks; exit 0 iff all pass
    Selftest,
}

pub(crate) fn init_threads(n: Option<usize>) -> Result<(), CliError> {
    let n = match n {
        Some(n) => Some(n),
        None => match std::env::var("DESBOVES_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| CliError::Config(format!("DESBOVES_THREADS: cannot parse '{v}'")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Render(a) => commands::render(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Misiurewicz(a) => commands::misiurewicz(a),
        Command::Continuity(a) => commands::continuity(a),
        Command::Selftest => commands::selftest(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! `dpfair`: fit, apply and check demographic-parity post-processing.
//!
//! Exit codes: 0 success or all checks passed, 1 an experiment check failed,
//! 2 usage, configuration or input-data error (including missing input
//! files), 3 other I/O errors.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::{CliError, EXIT_FAIL};

#[derive(Debug, Parser)]
#[command(name = "dpfair", version, about = "Demographic-parity fair regression by Wasserstein-barycenter post-processing")]
struct Cli {
    /// Cap on worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's top-level seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a base model and its fair post-processor from the [fit] section.
    Fit(RunArgs),
    /// Predict for every row of a CSV file.
    Predict(commands::predict::PredictArgs),
    /// Score unfair and fair predictions on a labeled CSV file.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Run a statistical experiment ("all" runs every one).
    Experiment {
        /// barycenter-oracle, gaussian-oracle, fairness-bound, rate, fairness-accuracy, dkw or all
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Write synthetic train/unlabeled/test CSV files from the [generate] section.
    Generate(RunArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(error::EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Fit(a) => commands::fit::run(a.config.as_deref(), a.seed, &a.out).map(|()| true),
        Command::Predict(a) => commands::predict::run(&a).map(|()| true),
        Command::Evaluate(a) => commands::evaluate::run(&a).map(|()| true),
        Command::Experiment { name, run } => commands::experiment::run(&name, run.config.as_deref(), run.seed, &run.out),
        Command::Generate(a) => commands::generate::run(a.config.as_deref(), a.seed, &a.out).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Loads the config (defaults when absent) and applies the seed override.
pub(crate) fn load_config(path: Option<&std::path::Path>, seed: Option<u64>) -> Result<dpfair::config::Config, CliError> {
    let mut config = match path {
        Some(p) => dpfair::config::Config::load(p).map_err(CliError::reading(p))?,
        None => dpfair::config::Config::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

//! `plmm`: simulate, fit, evaluate and interpret evolutionary clusterings.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "plmm",
    version,
    about = "Evolutionary clustering of temporal count data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark with ground truth.
    Simulate(#[command(flatten)] Common),
    /// Fit a temporal dataset (CSV or JSONL).
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// ARI against ground truth and/or k-fold perplexity of a fit.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "in")]
        input: PathBuf,
        /// truth.json written by `simulate`.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// fit.json written by `fit`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Discretize the fitted links of every transition.
    Interpret {
        #[command(flatten)]
        common: Common,
        /// fit.json written by `fit`.
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Rerun a command from its manifest and verify the outputs match.
    Replay {
        #[arg(long = "in")]
        input: PathBuf,
        /// Write the rerun here instead of the recorded directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("PLMM_NUM_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Validation(format!(
                "PLMM_NUM_THREADS must be a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let config = RunConfig::load(common.config.as_deref())?.with_seed(common.seed);
    config.validate()?;
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(common) => {
            let m = commands::simulate(&load_config(&common)?, &common.out)?;
            println!(
                "wrote {} files to {}",
                m.outputs.len() + 1,
                common.out.display()
            );
        }
        Command::Fit { common, input } => {
            let m = commands::fit(&load_config(&common)?, &input, &common.out)?;
            println!(
                "wrote {} files to {}",
                m.outputs.len() + 1,
                common.out.display()
            );
        }
        Command::Evaluate {
            common,
            input,
            truth,
            model,
        } => {
            commands::evaluate(
                &load_config(&common)?,
                &input,
                truth.as_deref(),
                model.as_deref(),
                &common.out,
            )?;
            println!("wrote {}", common.out.join("report.json").display());
        }
        Command::Interpret { common, input } => {
            commands::interpret(&load_config(&common)?, &input, &common.out)?;
            println!("wrote {}", common.out.join("interpretation.json").display());
        }
        Command::Replay { input, out } => {
            let differing = commands::replay(&input, out.as_deref())?;
            if !differing.is_empty() {
                return Err(CliError::Runtime(format!(
                    "outputs differ from the manifest: {}",
                    differing.join(", ")
                )));
            }
            println!("all outputs match {}", input.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use condensate_cli::config::{validate_config, ConfigError, OutputFormat};
use condensate_cli::scenario::{run_scenario, RunError};

/// Truncated-Wigner scenarios for pair-pumped condensates.
#[derive(Debug, Parser)]
#[command(name = "condensate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `integrator.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `format`.
        #[arg(long, value_enum)]
        format: Option<OutputFormat>,
    },
    /// Parse and validate a config, printing the resolved form as JSON.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| {
        RunError::Config(ConfigError {
            path: "<file>".into(),
            message: format!("cannot read {}: {e}", path.display()),
        })
    })
}

fn execute(cli: Cli) -> Result<serde_json::Value, RunError> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = validate_config(&load(&config)?)?;
            Ok(serde_json::to_value(&cfg).map_err(condensate_twa::Error::from)?)
        }
        Command::Run {
            config,
            out,
            seed,
            format,
        } => {
            let mut cfg = validate_config(&load(&config)?)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Some(seed) = seed {
                cfg.integrator.seed = seed;
            }
            if let Some(format) = format {
                cfg.format = format;
            }
            let summary = run_scenario(&cfg)?;
            Ok(serde_json::to_value(&summary).map_err(condensate_twa::Error::from)?)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("serializable");
            let _ = writeln!(std::io::stdout(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

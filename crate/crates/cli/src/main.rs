//! `wasserflow`: runs experiments described by TOML configs or built-in presets.
//!
//! Exit codes: 0 success, 1 configuration or runtime error, 2 the Euler scheme
//! left its stability bound, 3 a verification check failed.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;
mod presets;
mod tolerances;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "wasserflow", version, about = "Particle experiments for dissipative evolutions of measures")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment.
    Run {
        /// Path to a TOML experiment config.
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// Name of a built-in preset (see `wasserflow presets`).
        #[arg(long)]
        preset: Option<String>,
        /// Overrides `numeric.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Do not print the summary.
        #[arg(long)]
        quiet: bool,
    },
    /// List built-in presets, or print one.
    Presets { name: Option<String> },
}

fn load(config: Option<PathBuf>, preset: Option<String>) -> Result<(ExperimentConfig, String), CliError> {
    match (config, preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            Ok((ExperimentConfig::parse(&text)?, stem))
        }
        (None, Some(name)) => {
            let text = presets::get(&name).ok_or_else(|| CliError::Config(format!("unknown preset {name:?}")))?;
            Ok((ExperimentConfig::parse(text)?, name))
        }
        (None, None) => Err(CliError::Config("give --config or --preset".into())),
    }
}

fn run(
    config: Option<PathBuf>,
    preset: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    quiet: bool,
) -> Result<bool, CliError> {
    let (mut cfg, stem) = load(config, preset)?;
    if let Some(seed) = seed {
        cfg.numeric.seed = seed;
    }
    let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("wasserflow-out").join(stem));
    let artifacts = commands::run(&cfg)?;
    let passed = artifacts.passed;
    let summary = output::write_run(&dir, &cfg, artifacts)?;
    if !quiet {
        println!("{}", serde_json::to_string_pretty(&summary).expect("plain data serializes"));
        println!("wrote {}", dir.display());
    }
    Ok(passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Presets { name: None } => {
            for (name, text) in presets::PRESETS {
                let about = ExperimentConfig::parse(text).ok().and_then(|c| c.description).unwrap_or_default();
                println!("{name:<24} {about}");
            }
            ExitCode::SUCCESS
        }
        Cmd::Presets { name: Some(name) } => match presets::get(&name) {
            Some(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: unknown preset {name:?}");
                ExitCode::from(1)
            }
        },
        Cmd::Run { config, preset, seed, out, quiet } => match run(config, preset, seed, out, quiet) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => {
                eprintln!("check failed");
                ExitCode::from(3)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        },
    }
}

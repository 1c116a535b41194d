//! Experiment driver: seeded runs of every pipeline with CSV artifacts.
//!
//! Subcommands: `run` executes the configured mode, `sweep` expands parameter
//! lists into one row per cell, `validate` checks a configuration and exits.
//! Identical configuration and seed produce byte-identical artifacts; the
//! `CALREG_THREADS` environment variable caps parallelism without affecting
//! outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use calreg_cli::config::ExperimentConfig;
use calreg_cli::modes::{self, RunArtifacts};

#[derive(Parser)]
#[command(name = "calreg", about = "Simulator construction and verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the JSON configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the configured mode.
    #[arg(long)]
    mode: Option<String>,
    /// Keep the dual iterate on a fixed-point grid (strict bit accounting).
    #[arg(long)]
    strict_bits: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the configured mode and write its artifacts.
    Run(RunArgs),
    /// Expand the sweep lists and write one summary row per cell.
    Sweep(RunArgs),
    /// Parse and validate the configuration, writing nothing.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(args: &RunArgs) -> anyhow::Result<(ExperimentConfig, u64, PathBuf)> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut config = ExperimentConfig::parse(&text)?;
    if let Some(mode) = &args.mode {
        config.mode = mode.parse()?;
    }
    if args.strict_bits {
        config.strict_bits = Some(true);
    }
    let seed = args.seed.unwrap_or(config.seed);
    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, seed, out_dir))
}

fn write_artifacts(out_dir: &Path, artifacts: &RunArtifacts) -> anyhow::Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    for (name, contents) in &artifacts.files {
        let path = out_dir.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    for line in &artifacts.summary {
        println!("{line}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| -> anyhow::Result<bool> {
        match &cli.command {
            Command::Run(args) => {
                let (config, seed, out_dir) = load_config(args)?;
                let artifacts = modes::run_mode(&config, seed)?;
                write_artifacts(&out_dir, &artifacts)?;
                Ok(artifacts.exit_ok)
            }
            Command::Sweep(args) => {
                let (config, seed, out_dir) = load_config(args)?;
                let artifacts = modes::run_sweep(&config, seed)?;
                write_artifacts(&out_dir, &artifacts)?;
                Ok(artifacts.exit_ok)
            }
            Command::Validate { config } => {
                let text = std::fs::read_to_string(config)
                    .with_context(|| format!("reading {}", config.display()))?;
                ExperimentConfig::parse(&text)?;
                println!("configuration is valid");
                Ok(true)
            }
        }
    })();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more checks failed; see the report artifacts");
            ExitCode::from(1)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

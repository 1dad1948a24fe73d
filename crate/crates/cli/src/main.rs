//! `iaca`: run and validate incremental widely linear IIR experiments.
//!
//! Exit status is 0 on success, 1 for configuration errors and 2 for
//! failures while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use iaca_core::experiment::{preset, presets, run_experiment, validate_config, ExperimentConfig, PRESET_NAMES};
use iaca_core::Error;

#[derive(Parser)]
#[command(name = "iaca", about = "Incremental widely linear IIR experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config or a built-in preset.
    Run {
        /// TOML config, or a meta.json from an earlier run.
        #[arg(required_unless_present = "preset", conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Run a built-in preset instead of a config file.
        #[arg(long, value_parser = PRESET_NAMES)]
        preset: Option<String>,
        /// Output directory; overrides the config, or roots a preset's outputs.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Wind CSV adding wind members to presets.
        #[arg(long, requires = "preset")]
        wind: Option<PathBuf>,
        /// Treat unknown config keys as warnings.
        #[arg(long)]
        lax: bool,
    },
    /// Check a config and print the resolved version.
    Validate {
        config: PathBuf,
        #[arg(long)]
        lax: bool,
    },
    /// List presets, or write their member configs as TOML files.
    Presets {
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long)]
        wind: Option<PathBuf>,
    },
    /// Print the version.
    Version,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(errors) => Failure::Config(errors.join("\n")),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn load(path: &Path, lax: bool) -> Result<ExperimentConfig, Failure> {
    match validate_config(path, !lax) {
        Ok(v) => {
            for w in &v.warnings {
                eprintln!("warning: {w}");
            }
            Ok(v.config)
        }
        Err(Error::Io(e)) => Err(Failure::Config(format!("cannot read {}: {e}", path.display()))),
        Err(Error::Json(e)) => Err(Failure::Config(format!("{}: JSON syntax: {e}", path.display()))),
        Err(e) => Err(e.into()),
    }
}

fn run_all(configs: &[ExperimentConfig]) -> Result<(), Failure> {
    let mut failed = false;
    for cfg in configs {
        let outcome = run_experiment(cfg)?;
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
        for f in &outcome.failures {
            eprintln!("error: {f}");
            failed = true;
        }
    }
    if failed {
        Err(Failure::Runtime("some sweep points failed; partial results written".into()))
    } else {
        Ok(())
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            preset: name,
            out,
            wind,
            lax,
        } => {
            let configs = match (config, name) {
                (Some(path), _) => {
                    let mut cfg = load(&path, lax)?;
                    if let Some(out) = out {
                        cfg.output = out;
                    }
                    vec![cfg]
                }
                (None, Some(name)) => {
                    let p = preset(&name, wind.as_deref()).ok_or_else(|| Failure::Config(format!("unknown preset {name}")))?;
                    p.rooted(&out.unwrap_or_else(|| PathBuf::from("results")))
                }
                (None, None) => unreachable!("clap requires a config or a preset"),
            };
            run_all(&configs)
        }
        Command::Validate { config, lax } => {
            let cfg = load(&config, lax)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::Presets { emit, wind } => {
            for p in presets(wind.as_deref()) {
                println!("{:<28}{}", p.name, p.description);
                if let Some(dir) = &emit {
                    for m in &p.members {
                        let file = dir.join(m.output.with_extension("toml"));
                        let parent = file.parent().unwrap_or(dir);
                        std::fs::create_dir_all(parent).map_err(|e| Failure::Runtime(e.to_string()))?;
                        std::fs::write(&file, m.to_toml()).map_err(|e| Failure::Runtime(e.to_string()))?;
                        println!("  wrote {}", file.display());
                    }
                }
            }
            Ok(())
        }
        Command::Version => {
            println!("iaca {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            for line in msg.lines() {
                eprintln!("config error: {line}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

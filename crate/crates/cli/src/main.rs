use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

/// Solve, verify and simulate the two-sector endogenous growth model.
#[derive(Debug, Parser)]
#[command(name = "uzawa", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `section.key = value` config file; every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `run.out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sampling seed (overrides `run.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Start state `k,h` for `simulate`.
    #[arg(long, global = true, value_parser = parse_state)]
    start: Option<(f64, f64)>,
    /// Number of simulated periods.
    #[arg(long, global = true)]
    horizon: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Check the model assumptions and print the report.
    Check,
    /// Solve the Bellman equation and write the value and policy tables.
    Solve,
    /// Roll a policy forward from `--start`.
    Simulate,
    /// Solve the externality model directly and in transformed variables.
    Transform,
    /// Check (and optionally solve) over a range of one parameter.
    Sweep,
    /// Print the effective configuration.
    Config,
}

fn parse_state(s: &str) -> Result<(f64, f64), String> {
    let (k, h) = s.split_once(',').ok_or("expected k,h")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    Ok((num(k)?, num(h)?))
}

/// Process exit statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Assumption = 2,
    NotConverged = 3,
    Input = 4,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            RunConfig::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.run.out = out.to_string_lossy().into_owned();
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some((k, h)) = cli.start {
        cfg.simulate.start_k = k;
        cfg.simulate.start_h = h;
    }
    if let Some(t) = cli.horizon {
        cfg.simulate.horizon = t;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return Exit::Input.into();
        }
    };
    let result = match cli.command {
        Command::Check => commands::check(&cfg),
        Command::Solve => commands::solve(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Transform => commands::transform(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Config => {
            print!("{}", cfg.to_flat());
            Ok(Exit::Ok)
        }
    };
    match result {
        Ok(code) => code.into(),
        Err(e) => {
            eprintln!("error: {e}");
            Exit::Input.into()
        }
    }
}

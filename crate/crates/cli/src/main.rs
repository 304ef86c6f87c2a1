use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

mod commands;
mod config;

use commands::{BanditArgs, EvaluateArgs, LatticeArgs, Output};
use config::{CommonArgs, ExperimentConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

/// Percolation-based resiliency scoring and regret experiments.
#[derive(Debug, Parser)]
#[command(name = "perc-regret", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Coupled sweep of spanning statistics over the probability grid.
    Percolate {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Critical-probability estimate: largest grid p with theta_hat <= epsilon.
    Pc {
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Resiliency reports, regret summary and regret surface for a design set.
    Evaluate {
        #[command(flatten)]
        args: EvaluateArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// UCB1 or EXP3 run with per-step regret accounting.
    Bandit {
        #[command(flatten)]
        args: BanditArgs,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Internal(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Percolate { common, .. }
        | Command::Pc { common, .. }
        | Command::Evaluate { common, .. }
        | Command::Bandit { common, .. } => common,
    };
    let cfg = ExperimentConfig::resolve(common)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let Output { main, summary } = pool.install(|| match &cli.command {
        Command::Percolate { lattice, .. } => commands::percolate(&cfg, lattice),
        Command::Pc { lattice, .. } => commands::pc(&cfg, lattice),
        Command::Evaluate { args, .. } => commands::evaluate(&cfg, args),
        Command::Bandit { args, .. } => commands::bandit_cmd(&cfg, args),
    })?;
    write_output(cfg.out.as_ref(), &main)?;
    if let Some(summary) = summary {
        let explicit = match &cli.command {
            Command::Bandit { args, .. } => args.summary.clone(),
            _ => None,
        };
        let target = explicit.or_else(|| {
            cfg.out.as_ref().map(|o| {
                let mut s = o.clone().into_os_string();
                s.push(".summary.json");
                PathBuf::from(s)
            })
        });
        match target {
            Some(p) => write_output(Some(&p), &summary)?,
            None => std::io::stderr()
                .write_all(&summary)
                .map_err(|e| CliError::Internal(e.to_string()))?,
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("perc-regret: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

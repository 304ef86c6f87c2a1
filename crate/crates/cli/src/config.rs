use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use perc_regret::percolation::{check_exponent, DEFAULT_EPSILON, DEFAULT_EXPONENT};
use perc_regret::Direction;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Horizontal,
    Vertical,
    Either,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Horizontal => Direction::Horizontal,
            DirectionArg::Vertical => Direction::Vertical,
            DirectionArg::Either => Direction::Either,
        }
    }
}

/// `start:stop:step` over edge probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Input(format!(
                "grid `{s}` must have the form start:stop:step"
            )));
        }
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("grid `{s}`: `{x}` is not a number")))
        };
        Ok(GridSpec {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            step: num(parts[2])?,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.step.is_nan() || self.step <= 0.0 {
            return Err(CliError::Input("grid step must be positive".into()));
        }
        if self.start.is_nan() || self.stop.is_nan() || self.start > self.stop {
            return Err(CliError::Input("grid start must not exceed stop".into()));
        }
        if self.start < 0.0 || self.stop > 1.0 {
            return Err(CliError::Input("grid must lie within [0, 1]".into()));
        }
        Ok(())
    }

    /// Grid points, rounded to 12 decimals so `0:1:0.01` yields `0.07` rather than `0.07000000000000001`.
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        self.validate()?;
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        if count > 1_000_000 {
            return Err(CliError::Input("grid has too many points".into()));
        }
        Ok((0..=count)
            .map(|i| {
                let p = self.start + i as f64 * self.step;
                ((p * 1e12).round() / 1e12).min(self.stop)
            })
            .collect())
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Values that may appear in a `--config` JSON file; flags take precedence.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub samples: Option<u64>,
    pub threads: Option<usize>,
    pub direction: Option<DirectionArg>,
    pub y: Option<f64>,
    pub epsilon: Option<f64>,
    pub grid: Option<GridSpec>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON file with default values for the flags below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo samples per estimate.
    #[arg(long)]
    pub samples: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum)]
    pub direction: Option<DirectionArg>,
    /// Cluster-number exponent, at most 2/3.
    #[arg(long)]
    pub y: Option<f64>,
    /// Spanning-probability threshold for the critical-point search.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Probability grid as start:stop:step.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// Resolved settings for one run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub samples: u64,
    pub direction: Direction,
    pub y: f64,
    pub epsilon: f64,
    pub grid: GridSpec,
    #[serde(skip)]
    pub threads: usize,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(p) => {
                let text = read_input(p)?;
                serde_json::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
            }
            None => ConfigFile::default(),
        };
        let grid = match &args.grid {
            Some(g) => GridSpec::parse(g)?,
            None => file.grid.unwrap_or(GridSpec {
                start: 0.0,
                stop: 1.0,
                step: 0.01,
            }),
        };
        grid.validate()?;
        let cfg = ExperimentConfig {
            seed: args.seed.or(file.seed).unwrap_or(0),
            samples: args.samples.or(file.samples).unwrap_or(1000),
            direction: args
                .direction
                .or(file.direction)
                .map_or(Direction::Either, Direction::from),
            y: args.y.or(file.y).unwrap_or(DEFAULT_EXPONENT),
            epsilon: args.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON),
            grid,
            threads: args.threads.or(file.threads).unwrap_or(0),
            out: args.out.clone().or(file.out),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
        };
        if cfg.samples == 0 {
            return Err(CliError::Input("samples must be at least 1".into()));
        }
        check_exponent(cfg.y).map_err(|e| CliError::Input(e.to_string()))?;
        if !(0.0..1.0).contains(&cfg.epsilon) {
            return Err(CliError::Input("epsilon must lie in [0, 1)".into()));
        }
        Ok(cfg)
    }

    /// Provenance line embedded at the top of every CSV output.
    pub fn header(&self, command: &str) -> String {
        format!(
            "# perc-regret {command} seed={} samples={} y={} epsilon={} direction={} grid={}",
            self.seed, self.samples, self.y, self.epsilon, self.direction, self.grid
        )
    }
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

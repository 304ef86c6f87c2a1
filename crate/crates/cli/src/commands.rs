use std::path::PathBuf;

use clap::Args;
use perc_regret::bandit::{self, ArmSet, ArmSpec, Policy, RegretTrace, Schedule};
use perc_regret::design::{
    self, parse_design_set, Design, DesignRegret, ResiliencyReport, SurfacePoint,
};
use perc_regret::lattice::place_notions;
use perc_regret::percolation::{self, McSettings, PercolationEstimate};
use perc_regret::{Execution, LatticeSpec};
use serde::Serialize;

use crate::config::{read_input, ExperimentConfig, Format};
use crate::CliError;

/// Bytes for `--out` (or stdout) plus an optional side summary.
pub struct Output {
    pub main: Vec<u8>,
    pub summary: Option<Vec<u8>>,
}

fn csv_bytes(
    header: &[String],
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    for line in header {
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(columns).map_err(internal)?;
    for r in rows {
        w.write_record(r).map_err(internal)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut v = serde_json::to_vec_pretty(value).map_err(internal)?;
    v.push(b'\n');
    Ok(v)
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn input(e: perc_regret::Error) -> CliError {
    CliError::Input(e.to_string())
}

fn settings(cfg: &ExperimentConfig, seed: u64) -> McSettings {
    McSettings {
        samples: cfg.samples,
        seed,
        direction: cfg.direction,
        exec: Execution::Parallel,
    }
}

#[derive(Debug, Clone, Args)]
pub struct LatticeArgs {
    #[arg(long, requires = "cols", conflicts_with = "design")]
    pub rows: Option<usize>,
    #[arg(long, requires = "rows")]
    pub cols: Option<usize>,
    /// Design or design-set file; the lattice is built from its notions.
    #[arg(long)]
    pub design: Option<PathBuf>,
    /// Design to use from a design set (default: the first).
    #[arg(long, requires = "design")]
    pub design_id: Option<String>,
}

fn resolve_lattice(args: &LatticeArgs) -> Result<(LatticeSpec, String), CliError> {
    match (&args.design, args.rows, args.cols) {
        (Some(path), _, _) => {
            let designs = parse_design_set(&read_input(path)?).map_err(input)?;
            let d = match &args.design_id {
                Some(id) => designs
                    .iter()
                    .find(|d| d.id() == id)
                    .ok_or_else(|| CliError::Input(format!("unknown design id `{id}`")))?,
                None => &designs[0],
            };
            let lattice = place_notions(d).map_err(input)?;
            Ok((lattice, format!("design={}", d.id())))
        }
        (None, Some(r), Some(c)) => {
            let lattice = LatticeSpec::full(r, c).map_err(input)?;
            Ok((lattice, format!("lattice={r}x{c}")))
        }
        _ => Err(CliError::Input(
            "give --rows and --cols, or --design".into(),
        )),
    }
}

#[derive(Serialize)]
struct SweepRow {
    p: f64,
    theta_hat: f64,
    theta_stderr: f64,
    p_infinity_hat: f64,
    k_hat: f64,
    k_stderr: f64,
}

impl From<&PercolationEstimate> for SweepRow {
    fn from(e: &PercolationEstimate) -> Self {
        let p = match e.p {
            percolation::EdgeProbability::Homogeneous(p) => p,
            percolation::EdgeProbability::PerEdge => f64::NAN,
        };
        SweepRow {
            p,
            theta_hat: e.theta_hat,
            theta_stderr: e.theta_std_error,
            p_infinity_hat: e.p_infinity_hat,
            k_hat: e.k_hat,
            k_stderr: e.k_std_error,
        }
    }
}

#[derive(Serialize)]
struct LatticeInfo {
    rows: usize,
    cols: usize,
    vertices: usize,
    edges: usize,
}

impl From<&LatticeSpec> for LatticeInfo {
    fn from(l: &LatticeSpec) -> Self {
        LatticeInfo {
            rows: l.rows(),
            cols: l.cols(),
            vertices: l.vertex_count(),
            edges: l.edge_count(),
        }
    }
}

#[derive(Serialize)]
struct PercolateJson<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    lattice: LatticeInfo,
    rows: Vec<SweepRow>,
}

pub fn percolate(cfg: &ExperimentConfig, args: &LatticeArgs) -> Result<Output, CliError> {
    let (lattice, source) = resolve_lattice(args)?;
    let grid = cfg.grid.points()?;
    let est = percolation::sweep(&lattice, &grid, &settings(cfg, cfg.seed)).map_err(input)?;
    let rows: Vec<SweepRow> = est.iter().map(SweepRow::from).collect();
    let main = match cfg.format {
        Format::Csv => csv_bytes(
            &[
                cfg.header("percolate"),
                format!(
                    "# {source} rows={} cols={} edges={}",
                    lattice.rows(),
                    lattice.cols(),
                    lattice.edge_count()
                ),
            ],
            &[
                "p",
                "theta_hat",
                "theta_stderr",
                "p_infinity_hat",
                "k_hat",
                "k_stderr",
            ],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.p.to_string(),
                        r.theta_hat.to_string(),
                        r.theta_stderr.to_string(),
                        r.p_infinity_hat.to_string(),
                        r.k_hat.to_string(),
                        r.k_stderr.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
        Format::Json => json_bytes(&PercolateJson {
            command: "percolate",
            config: cfg,
            lattice: LatticeInfo::from(&lattice),
            rows,
        })?,
    };
    Ok(Output {
        main,
        summary: None,
    })
}

#[derive(Serialize)]
struct TracePoint {
    p: f64,
    theta_hat: f64,
}

#[derive(Serialize)]
struct PcJson<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    lattice: LatticeInfo,
    p_c_hat: f64,
    threshold: f64,
    bracketed: bool,
    samples: u64,
    trace: Vec<TracePoint>,
}

pub fn pc(cfg: &ExperimentConfig, args: &LatticeArgs) -> Result<Output, CliError> {
    let (lattice, source) = resolve_lattice(args)?;
    let grid = cfg.grid.points()?;
    let est = percolation::estimate_pc(&lattice, &grid, cfg.epsilon, &settings(cfg, cfg.seed))
        .map_err(input)?;
    let main = match cfg.format {
        Format::Csv => csv_bytes(
            &[
                cfg.header("pc"),
                format!(
                    "# {source} rows={} cols={} edges={}",
                    lattice.rows(),
                    lattice.cols(),
                    lattice.edge_count()
                ),
                format!(
                    "# p_c_hat={} threshold={} bracketed={}",
                    est.p_c_hat, est.threshold, est.bracketed
                ),
            ],
            &["p", "theta_hat"],
            &est.trace
                .iter()
                .map(|(p, t)| vec![p.to_string(), t.to_string()])
                .collect::<Vec<_>>(),
        )?,
        Format::Json => json_bytes(&PcJson {
            command: "pc",
            config: cfg,
            lattice: LatticeInfo::from(&lattice),
            p_c_hat: est.p_c_hat,
            threshold: est.threshold,
            bracketed: est.bracketed,
            samples: est.samples,
            trace: est
                .trace
                .iter()
                .map(|&(p, theta_hat)| TracePoint { p, theta_hat })
                .collect(),
        })?,
    };
    Ok(Output {
        main,
        summary: None,
    })
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Design-set JSON file.
    pub designs: PathBuf,
    /// Design whose empirical regret is reported separately.
    #[arg(long)]
    pub chosen: Option<String>,
}

#[derive(Serialize)]
struct ReportRow<'a> {
    #[serde(flatten)]
    report: &'a ResiliencyReport,
    empirical_regret: f64,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    optimal_design_id: &'a str,
    regret_star: f64,
    regret_bound: f64,
    regrets: &'a [DesignRegret],
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_design_id: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_empirical_regret: Option<f64>,
}

#[derive(Serialize)]
struct EvaluateJson<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    reports: Vec<ReportRow<'a>>,
    summary: SummaryJson<'a>,
    surface: &'a [SurfacePoint],
}

pub fn evaluate(cfg: &ExperimentConfig, args: &EvaluateArgs) -> Result<Output, CliError> {
    let designs: Vec<Design> = parse_design_set(&read_input(&args.designs)?).map_err(input)?;
    let reports = design::evaluate_designs(
        &designs,
        cfg.samples,
        cfg.seed,
        cfg.direction,
        cfg.y,
        Execution::Parallel,
    )
    .map_err(input)?;
    let summary = design::regret_summary(&reports).map_err(input)?;
    let chosen_regret = match &args.chosen {
        Some(id) => Some(design::empirical_regret(&reports, id).map_err(input)?),
        None => None,
    };
    let sizes: Vec<usize> = designs.iter().map(Design::notion_count).collect();
    let grid = cfg.grid.points()?;
    let surface = design::regret_surface(
        &sizes,
        &grid,
        cfg.samples,
        cfg.seed,
        cfg.direction,
        cfg.y,
        Execution::Parallel,
    )
    .map_err(input)?;

    let rows: Vec<ReportRow> = reports
        .iter()
        .zip(&summary.regrets)
        .map(|(report, r)| ReportRow {
            report,
            empirical_regret: r.regret,
        })
        .collect();
    let summary_json = SummaryJson {
        optimal_design_id: &summary.optimal_design_id,
        regret_star: summary.regret_star,
        regret_bound: summary.regret_bound,
        regrets: &summary.regrets,
        chosen_design_id: args.chosen.as_deref(),
        chosen_empirical_regret: chosen_regret,
    };
    let main = match cfg.format {
        Format::Json => json_bytes(&EvaluateJson {
            command: "evaluate",
            config: cfg,
            reports: rows,
            summary: summary_json,
            surface: &surface,
        })?,
        Format::Csv => {
            let mut header = vec![
                cfg.header("evaluate"),
                format!(
                    "# optimal_design_id={} regret_star={} regret_bound={}",
                    summary.optimal_design_id, summary.regret_star, summary.regret_bound
                ),
            ];
            if let (Some(id), Some(r)) = (&args.chosen, chosen_regret) {
                header.push(format!(
                    "# chosen_design_id={id} chosen_empirical_regret={r}"
                ));
            }
            header.push("# section=reports".into());
            let mut out = csv_bytes(
                &header,
                &[
                    "design_id",
                    "l",
                    "phi_hat",
                    "phi_stderr",
                    "theoretical_limit",
                    "theoretical_regret",
                    "empirical_regret",
                ],
                &rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.report.design_id.clone(),
                            r.report.l.to_string(),
                            r.report.phi_hat.to_string(),
                            r.report.phi_std_error.to_string(),
                            r.report.theoretical_limit.to_string(),
                            r.report.theoretical_regret.to_string(),
                            r.empirical_regret.to_string(),
                        ]
                    })
                    .collect::<Vec<_>>(),
            )?;
            out.extend(csv_bytes(
                &["# section=surface".into()],
                &[
                    "l",
                    "p",
                    "phi_hat",
                    "theoretical_limit",
                    "theoretical_regret",
                ],
                &surface
                    .iter()
                    .map(|s| {
                        vec![
                            s.l.to_string(),
                            s.p.to_string(),
                            s.phi_hat.to_string(),
                            s.theoretical_limit.to_string(),
                            s.theoretical_regret.to_string(),
                        ]
                    })
                    .collect::<Vec<_>>(),
            )?);
            out
        }
    };
    Ok(Output {
        main,
        summary: None,
    })
}

#[derive(Debug, Clone, Args)]
pub struct BanditArgs {
    /// Arms JSON file.
    #[arg(long)]
    pub arms: PathBuf,
    #[arg(long, value_parser = parse_policy)]
    pub policy: Policy,
    /// Number of steps T.
    #[arg(long)]
    pub horizon: usize,
    /// Adversarial reward schedule: CSV with T rows and one column per arm.
    #[arg(long)]
    pub schedule: Option<PathBuf>,
    /// Design set resolving `design` arms.
    #[arg(long)]
    pub designs: Option<PathBuf>,
    /// EXP3 exploration rate (default: min(1, sqrt(K ln K / ((e-1) T)))).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Independent seed replicas; the per-step table shows replica 0.
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    /// Where to write the summary JSON (default: `<out>.summary.json`, or stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse().map_err(|e: perc_regret::Error| e.to_string())
}

pub fn read_schedule(path: &std::path::Path) -> Result<Schedule, CliError> {
    let text = read_input(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Input(format!(
                        "{}: row {}: `{f}` is not a number",
                        path.display(),
                        i + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Schedule::new(rows).map_err(input)
}

#[derive(Serialize)]
struct RegretTotals {
    mean_regret: f64,
    mean_regret_counts: f64,
    realized_regret: f64,
    weak_regret: f64,
}

#[derive(Serialize)]
struct ReplicaMeans {
    mean_regret: f64,
    realized_regret: f64,
    weak_regret: f64,
}

#[derive(Serialize)]
struct BanditSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    policy: Policy,
    horizon: usize,
    arms: usize,
    gamma: Option<f64>,
    adversarial: bool,
    replicas: usize,
    means: Vec<f64>,
    means_source: &'static str,
    pull_counts: Vec<u64>,
    replica0: RegretTotals,
    replica_mean: ReplicaMeans,
}

#[derive(Serialize)]
struct StepRow {
    t: usize,
    arm: usize,
    reward: f64,
    cum_mean_regret: f64,
    cum_realized_regret: f64,
    cum_weak_regret: f64,
}

#[derive(Serialize)]
struct BanditJson<'a> {
    #[serde(flatten)]
    summary: &'a BanditSummary<'a>,
    steps: Vec<StepRow>,
}

fn column_means(schedule: &Schedule, horizon: usize) -> Vec<f64> {
    let mut m = vec![0.0; schedule.arms()];
    for row in &schedule.rows()[..horizon] {
        for (a, x) in m.iter_mut().zip(row) {
            *a += x;
        }
    }
    m.iter().map(|s| s / horizon as f64).collect()
}

pub fn bandit_cmd(cfg: &ExperimentConfig, args: &BanditArgs) -> Result<Output, CliError> {
    let specs: Vec<ArmSpec> = serde_json::from_str(&read_input(&args.arms)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.arms.display())))?;
    let designs = match &args.designs {
        Some(p) => parse_design_set(&read_input(p)?).map_err(input)?,
        None => Vec::new(),
    };
    let arms = ArmSet::from_specs(&specs, &designs, cfg.y, cfg.direction).map_err(input)?;
    let schedule = match &args.schedule {
        Some(p) => Some(read_schedule(p)?),
        None => None,
    };
    if args.horizon == 0 {
        return Err(CliError::Input("horizon must be at least 1".into()));
    }
    if args.replicas == 0 {
        return Err(CliError::Input("replicas must be at least 1".into()));
    }
    if let Some(s) = &schedule {
        if s.arms() != arms.len() {
            return Err(CliError::Input(format!(
                "schedule has {} columns but {} arms are defined",
                s.arms(),
                arms.len()
            )));
        }
        if s.len() < args.horizon {
            return Err(CliError::Input(format!(
                "schedule has {} rows, horizon is {}",
                s.len(),
                args.horizon
            )));
        }
    }
    let (means, means_source) = match &schedule {
        Some(s) => (column_means(s, args.horizon), "schedule"),
        None if arms.has_design_arms() => (arms.means(cfg.samples, cfg.seed), "estimated"),
        None => (arms.means(1, cfg.seed), "exact"),
    };
    let gamma = match args.policy {
        Policy::Exp3 => Some(
            args.gamma
                .unwrap_or_else(|| bandit::exp3_standard_gamma(arms.len(), args.horizon)),
        ),
        Policy::Ucb1 => None,
    };

    let run = |seed: u64| -> Result<RegretTrace, CliError> {
        bandit::run_bandit(
            &arms,
            args.policy,
            args.horizon,
            seed,
            gamma,
            schedule.as_ref(),
        )
        .map_err(input)
    };
    let totals = |tr: &RegretTrace| -> Result<RegretTotals, CliError> {
        Ok(RegretTotals {
            mean_regret: bandit::mean_regret(tr, &means).map_err(input)?,
            mean_regret_counts: bandit::mean_regret_from_counts(&tr.pull_counts(), &means)
                .map_err(input)?,
            realized_regret: bandit::realized_regret(tr).map_err(input)?,
            weak_regret: bandit::weak_regret(tr).map_err(input)?,
        })
    };

    let first = run(cfg.seed)?;
    let replica0 = totals(&first)?;
    let rest: Vec<Result<RegretTotals, CliError>> = if args.replicas > 1 {
        bandit::replicate(cfg.seed, args.replicas - 1, Execution::Parallel, |s| {
            run(s).and_then(|tr| totals(&tr))
        })
    } else {
        Vec::new()
    };
    let mut all = vec![(
        replica0.mean_regret,
        replica0.realized_regret,
        replica0.weak_regret,
    )];
    for r in rest {
        let r = r?;
        all.push((r.mean_regret, r.realized_regret, r.weak_regret));
    }
    let n = all.len() as f64;
    let replica_mean = ReplicaMeans {
        mean_regret: all.iter().map(|x| x.0).sum::<f64>() / n,
        realized_regret: all.iter().map(|x| x.1).sum::<f64>() / n,
        weak_regret: all.iter().map(|x| x.2).sum::<f64>() / n,
    };

    let cum_mean = first.cumulative_mean_regret(&means).map_err(input)?;
    let cum_real = first.cumulative_realized_regret().map_err(input)?;
    let steps: Vec<StepRow> = (0..first.horizon())
        .map(|t| StepRow {
            t: t + 1,
            arm: first.chosen()[t],
            reward: first.rewards()[t],
            cum_mean_regret: cum_mean[t],
            cum_realized_regret: cum_real[t],
            cum_weak_regret: cum_real[t],
        })
        .collect();
    let summary = BanditSummary {
        command: "bandit",
        config: cfg,
        policy: args.policy,
        horizon: args.horizon,
        arms: arms.len(),
        gamma,
        adversarial: schedule.is_some(),
        replicas: args.replicas,
        means,
        means_source,
        pull_counts: first.pull_counts(),
        replica0,
        replica_mean,
    };
    match cfg.format {
        Format::Json => Ok(Output {
            main: json_bytes(&BanditJson {
                summary: &summary,
                steps,
            })?,
            summary: None,
        }),
        Format::Csv => Ok(Output {
            main: csv_bytes(
                &[cfg.header("bandit")],
                &[
                    "t",
                    "arm",
                    "reward",
                    "cum_mean_regret",
                    "cum_realized_regret",
                    "cum_weak_regret",
                ],
                &steps
                    .iter()
                    .map(|s| {
                        vec![
                            s.t.to_string(),
                            s.arm.to_string(),
                            s.reward.to_string(),
                            s.cum_mean_regret.to_string(),
                            s.cum_realized_regret.to_string(),
                            s.cum_weak_regret.to_string(),
                        ]
                    })
                    .collect::<Vec<_>>(),
            )?,
            summary: Some(json_bytes(&summary)?),
        }),
    }
}

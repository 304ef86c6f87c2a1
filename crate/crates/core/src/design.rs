//! Candidate designs, their resiliency reward and regret over a design set.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::lattice::{edge_probabilities, place_notions, Direction, LatticeSpec};
use crate::percolation::{self, check_exponent, theoretical_k_limit, McSettings};
use crate::rng;

/// Pairwise connection probability between notions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Lambda {
    Scalar(f64),
    /// Symmetric `l x l`; the diagonal is ignored.
    Matrix(Vec<Vec<f64>>),
}

impl Lambda {
    pub fn validate(&self, l: usize) -> Result<()> {
        match self {
            Lambda::Scalar(p) => check_unit(*p, "lambda"),
            Lambda::Matrix(m) => {
                if m.len() != l {
                    return Err(Error::validation(
                        "lambda",
                        format!("expected {l} rows, got {}", m.len()),
                    ));
                }
                for (i, row) in m.iter().enumerate() {
                    if row.len() != l {
                        return Err(Error::validation(
                            format!("lambda[{i}]"),
                            format!("expected {l} columns, got {}", row.len()),
                        ));
                    }
                }
                for (i, row) in m.iter().enumerate() {
                    for (j, &x) in row.iter().enumerate() {
                        if i == j {
                            continue;
                        }
                        check_unit(x, &format!("lambda[{i}][{j}]"))?;
                        if j > i && (x - m[j][i]).abs() > 1e-12 {
                            return Err(Error::validation(
                                format!("lambda[{i}][{j}]"),
                                format!(
                                    "matrix is not symmetric: {x} vs lambda[{j}][{i}] = {}",
                                    m[j][i]
                                ),
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_unit(p: f64, path: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::validation(path, format!("{p} is outside [0, 1]")))
    }
}

/// A candidate design: an ordered set of notions and their connectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    id: String,
    notions: Vec<String>,
    lambda: Lambda,
}

impl Design {
    pub fn new(id: impl Into<String>, notions: Vec<String>, lambda: Lambda) -> Result<Self> {
        let d = Design {
            id: id.into(),
            notions,
            lambda,
        };
        d.validate("")?;
        Ok(d)
    }

    fn validate(&self, prefix: &str) -> Result<()> {
        if self.notions.is_empty() {
            return Err(Error::validation(
                format!("{prefix}notions"),
                "design has no notions",
            ));
        }
        let mut seen = HashSet::new();
        for (i, n) in self.notions.iter().enumerate() {
            if !seen.insert(n.as_str()) {
                return Err(Error::validation(
                    format!("{prefix}notions[{i}]"),
                    format!("duplicate notion label `{n}`"),
                ));
            }
        }
        self.lambda
            .validate(self.notions.len())
            .map_err(|e| match e {
                Error::Validation { path, message } => Error::Validation {
                    path: format!("{prefix}{path}"),
                    message,
                },
                other => other,
            })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn notions(&self) -> &[String] {
        &self.notions
    }

    pub fn notion_count(&self) -> usize {
        self.notions.len()
    }

    pub fn lambda(&self) -> &Lambda {
        &self.lambda
    }

    /// Same notions, every pair at `p`.
    pub fn with_scalar_lambda(&self, p: f64) -> Result<Design> {
        Design::new(self.id.clone(), self.notions.clone(), Lambda::Scalar(p))
    }
}

fn typed_field<'a>(
    obj: &'a serde_json::Map<String, Value>,
    key: &str,
    prefix: &str,
) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::validation(format!("{prefix}{key}"), "missing field"))
}

fn design_from_value(v: &Value, prefix: &str) -> Result<Design> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::validation(prefix.trim_end_matches('.'), "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "id" | "notions" | "lambda") {
            return Err(Error::validation(format!("{prefix}{key}"), "unknown field"));
        }
    }
    let id = typed_field(obj, "id", prefix)?
        .as_str()
        .ok_or_else(|| Error::validation(format!("{prefix}id"), "expected a string"))?
        .to_string();
    let notions = typed_field(obj, "notions", prefix)?
        .as_array()
        .ok_or_else(|| {
            Error::validation(format!("{prefix}notions"), "expected an array of strings")
        })?
        .iter()
        .enumerate()
        .map(|(i, n)| {
            n.as_str().map(str::to_string).ok_or_else(|| {
                Error::validation(format!("{prefix}notions[{i}]"), "expected a string")
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda = match typed_field(obj, "lambda", prefix)? {
        Value::Number(n) => Lambda::Scalar(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(rows) => Lambda::Matrix(
            rows.iter()
                .enumerate()
                .map(|(i, row)| {
                    row.as_array()
                        .ok_or_else(|| {
                            Error::validation(
                                format!("{prefix}lambda[{i}]"),
                                "expected an array of numbers",
                            )
                        })?
                        .iter()
                        .enumerate()
                        .map(|(j, x)| {
                            x.as_f64().ok_or_else(|| {
                                Error::validation(
                                    format!("{prefix}lambda[{i}][{j}]"),
                                    "expected a number",
                                )
                            })
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => {
            return Err(Error::validation(
                format!("{prefix}lambda"),
                "expected a number or a matrix",
            ))
        }
    };
    let d = Design {
        id,
        notions,
        lambda,
    };
    d.validate(prefix)?;
    Ok(d)
}

/// Parses one design object.
pub fn parse_design(document: &str) -> Result<Design> {
    let v: Value = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    design_from_value(&v, "")
}

/// Parses a design-set file: a JSON array of designs, or a single design object.
pub fn parse_design_set(document: &str) -> Result<Vec<Design>> {
    let v: Value = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    let designs = match &v {
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| design_from_value(item, &format!("[{i}].")))
            .collect::<Result<Vec<_>>>()?,
        Value::Object(_) => vec![design_from_value(&v, "")?],
        _ => {
            return Err(Error::validation(
                "",
                "expected a design object or an array of designs",
            ))
        }
    };
    if designs.is_empty() {
        return Err(Error::validation("", "design set is empty"));
    }
    let mut ids = HashSet::new();
    for (i, d) in designs.iter().enumerate() {
        if !ids.insert(d.id()) {
            return Err(Error::validation(
                format!("[{i}].id"),
                format!("duplicate design id `{}`", d.id()),
            ));
        }
    }
    Ok(designs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResiliencyReport {
    pub design_id: String,
    pub l: usize,
    pub phi_hat: f64,
    pub phi_std_error: f64,
    pub theoretical_limit: f64,
    pub theoretical_regret: f64,
    pub samples: u64,
    pub seed: u64,
    pub direction: Direction,
    pub y: f64,
}

/// Mean spanning-cluster count of the design's lattice, with its gap to `l^(2-3y)`.
pub fn resiliency_reward(
    design: &Design,
    settings: &McSettings,
    y: f64,
) -> Result<ResiliencyReport> {
    check_exponent(y)?;
    let lattice = place_notions(design)?;
    let probs = edge_probabilities(design, &lattice)?;
    let est = percolation::estimate_theta(&lattice, &probs, settings)?;
    let limit = theoretical_k_limit(design.notion_count(), y)?;
    Ok(ResiliencyReport {
        design_id: design.id().to_string(),
        l: design.notion_count(),
        phi_hat: est.k_hat,
        phi_std_error: est.k_std_error,
        theoretical_limit: limit,
        theoretical_regret: limit - est.k_hat,
        samples: settings.samples,
        seed: settings.seed,
        direction: settings.direction,
        y,
    })
}

/// Evaluates every design with a seed derived from `master_seed` and the design id.
pub fn evaluate_designs(
    designs: &[Design],
    samples: u64,
    master_seed: u64,
    direction: Direction,
    y: f64,
    exec: Execution,
) -> Result<Vec<ResiliencyReport>> {
    // designs run one after another; each estimate parallelizes over samples
    designs
        .iter()
        .map(|d| {
            let settings = McSettings {
                samples,
                seed: rng::derive_seed(master_seed, d.id()),
                direction,
                exec,
            };
            resiliency_reward(d, &settings, y)
        })
        .collect()
}

/// Unclamped `l^(2-3y) - phi_hat`.
pub fn theoretical_regret(report: &ResiliencyReport) -> f64 {
    report.theoretical_limit - report.phi_hat
}

fn best_phi(reports: &[ResiliencyReport]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in reports.iter().enumerate() {
        if best.is_none_or(|(_, b)| r.phi_hat > b) {
            best = Some((i, r.phi_hat));
        }
    }
    best
}

/// Best `phi_hat` in the set minus the chosen design's.
pub fn empirical_regret(reports: &[ResiliencyReport], chosen: &str) -> Result<f64> {
    let c = reports
        .iter()
        .find(|r| r.design_id == chosen)
        .ok_or_else(|| Error::UnknownDesign(chosen.to_string()))?;
    let (_, best) = best_phi(reports).expect("non-empty");
    Ok(best - c.phi_hat)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRegret {
    pub design_id: String,
    pub regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretSummary {
    pub regrets: Vec<DesignRegret>,
    pub regret_star: f64,
    pub regret_bound: f64,
    pub optimal_design_id: String,
}

pub fn regret_summary(reports: &[ResiliencyReport]) -> Result<RegretSummary> {
    let (best_idx, best) =
        best_phi(reports).ok_or_else(|| Error::validation("reports", "no designs to summarize"))?;
    let regrets: Vec<DesignRegret> = reports
        .iter()
        .map(|r| DesignRegret {
            design_id: r.design_id.clone(),
            regret: best - r.phi_hat,
        })
        .collect();
    let regret_star = regrets
        .iter()
        .map(|r| r.regret)
        .fold(f64::INFINITY, f64::min);
    let max_regret = regrets
        .iter()
        .map(|r| r.regret)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RegretSummary {
        regrets,
        regret_star,
        regret_bound: max_regret - regret_star,
        optimal_design_id: reports[best_idx].design_id.clone(),
    })
}

/// One point of the `(p, l)` theoretical-regret surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub l: usize,
    pub p: f64,
    pub phi_hat: f64,
    pub theoretical_limit: f64,
    pub theoretical_regret: f64,
}

/// Theoretical regret at homogeneous `p` for every distinct notion count.
pub fn regret_surface(
    sizes: &[usize],
    grid: &[f64],
    samples: u64,
    master_seed: u64,
    direction: Direction,
    y: f64,
    exec: Execution,
) -> Result<Vec<SurfacePoint>> {
    let mut ls: Vec<usize> = sizes.to_vec();
    ls.sort_unstable();
    ls.dedup();
    let mut out = Vec::with_capacity(ls.len() * grid.len());
    for l in ls {
        let lattice = LatticeSpec::for_count(l)?;
        let limit = theoretical_k_limit(l, y)?;
        let settings = McSettings {
            samples,
            seed: rng::derive_seed(master_seed, &format!("surface/{l}")),
            direction,
            exec,
        };
        let sweep = percolation::sweep(&lattice, grid, &settings)?;
        out.extend(sweep.iter().zip(grid).map(|(e, &p)| SurfacePoint {
            l,
            p,
            phi_hat: e.k_hat,
            theoretical_limit: limit,
            theoretical_regret: limit - e.k_hat,
        }));
    }
    Ok(out)
}

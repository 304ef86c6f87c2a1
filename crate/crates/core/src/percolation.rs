//! Monte Carlo and exact estimators for spanning probability, the spanning-edge
//! fraction, the mean spanning-cluster count and the critical probability.
//!
//! Sample `s` of a run opens edge `e` iff `rng::uniform(seed, s, e) < probs[e]`.
//! Runs that share a seed are therefore coupled: raising any edge probability
//! can only add open edges to every sample.

use serde::Serialize;

use crate::dsu::DisjointSet;
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::lattice::{BondConfiguration, ClusterLabeling, Direction, LatticeSpec};
use crate::rng;

/// Largest edge count `exhaustive_enumerate` will accept.
pub const ENUMERATION_LIMIT: usize = 20;

/// Upper bound on the cluster-number exponent.
pub const MAX_EXPONENT: f64 = 2.0 / 3.0;

/// Default exponent; gives a limit of `sqrt(l)`.
pub const DEFAULT_EXPONENT: f64 = 0.5;

pub const DEFAULT_EPSILON: f64 = 0.05;

/// Sampling parameters shared by every Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub samples: u64,
    pub seed: u64,
    pub direction: Direction,
    pub exec: Execution,
}

impl McSettings {
    pub fn new(samples: u64, seed: u64) -> Self {
        McSettings {
            samples,
            seed,
            direction: Direction::default(),
            exec: Execution::default(),
        }
    }

    pub fn direction(mut self, direction: Direction) -> Self {
        self.direction = direction;
        self
    }

    pub fn exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn check(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::validation("samples", "must be at least 1"));
        }
        Ok(())
    }
}

/// Probability at which an estimate was taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum EdgeProbability {
    Homogeneous(f64),
    PerEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PercolationEstimate {
    pub p: EdgeProbability,
    pub theta_hat: f64,
    pub theta_std_error: f64,
    pub p_infinity_hat: f64,
    pub p_infinity_std_error: f64,
    pub k_hat: f64,
    pub k_std_error: f64,
    pub samples: u64,
}

/// Integer sufficient statistics of a batch of samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    spanning_samples: u64,
    k_sum: u64,
    k_sq_sum: u64,
    spanning_edges: u64,
}

impl Tally {
    fn record(&mut self, k: u64, spanning_edges: u64) {
        if k > 0 {
            self.spanning_samples += 1;
        }
        self.k_sum += k;
        self.k_sq_sum += k * k;
        self.spanning_edges += spanning_edges;
    }

    fn merge(&mut self, other: &Tally) {
        self.spanning_samples += other.spanning_samples;
        self.k_sum += other.k_sum;
        self.k_sq_sum += other.k_sq_sum;
        self.spanning_edges += other.spanning_edges;
    }

    fn finish(&self, p: EdgeProbability, samples: u64, edges: usize) -> PercolationEstimate {
        let n = samples as f64;
        let theta = self.spanning_samples as f64 / n;
        let p_inf = if edges == 0 {
            0.0
        } else {
            self.spanning_edges as f64 / (n * edges as f64)
        };
        let k = self.k_sum as f64 / n;
        let k_se = if samples > 1 {
            // integer-exact numerator of the sample variance
            let num = self.k_sq_sum as f64 * n - (self.k_sum as f64) * (self.k_sum as f64);
            let var = (num / (n * (n - 1.0))).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        PercolationEstimate {
            p,
            theta_hat: theta,
            theta_std_error: binomial_se(theta, n),
            p_infinity_hat: p_inf,
            p_infinity_std_error: binomial_se(p_inf, n),
            k_hat: k,
            k_std_error: k_se,
            samples,
        }
    }
}

fn binomial_se(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).max(0.0).sqrt()
}

fn check_probs(lattice: &LatticeSpec, probs: &[f64]) -> Result<()> {
    if probs.len() != lattice.edge_count() {
        return Err(Error::LengthMismatch {
            what: "edge probabilities",
            expected: lattice.edge_count(),
            actual: probs.len(),
        });
    }
    for (k, p) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::validation(
                format!("probs[{k}]"),
                format!("{p} is not a probability"),
            ));
        }
    }
    Ok(())
}

/// Reusable per-worker buffers for evaluating one sample.
struct Scratch {
    dsu: DisjointSet,
    mask: Vec<u8>,
    inner_edges: Vec<u32>,
    uniforms: Vec<f64>,
    order: Vec<u32>,
}

impl Scratch {
    fn new(lattice: &LatticeSpec) -> Self {
        Scratch {
            dsu: DisjointSet::new(lattice.vertex_count()),
            mask: vec![0; lattice.vertex_count()],
            inner_edges: vec![0; lattice.vertex_count()],
            uniforms: vec![0.0; lattice.edge_count()],
            order: (0..lattice.edge_count() as u32).collect(),
        }
    }

    /// `(spanning cluster count, open edges inside spanning clusters)` for the open set.
    fn evaluate(
        &mut self,
        lattice: &LatticeSpec,
        open: impl Fn(usize) -> bool,
        direction: Direction,
    ) -> (u64, u64) {
        let n = lattice.vertex_count();
        self.dsu.reset(n);
        for (k, e) in lattice.edges().iter().enumerate() {
            if open(k) {
                self.dsu.union(e.a, e.b);
            }
        }
        self.mask.iter_mut().for_each(|m| *m = 0);
        for v in 0..n {
            let r = self.dsu.find(v);
            self.mask[r] |= lattice.boundary_mask(v);
        }
        let k = (0..n)
            .filter(|&v| self.dsu.find(v) == v && direction.spans(self.mask[v]))
            .count() as u64;
        let mut inside = 0;
        if k > 0 {
            for (i, e) in lattice.edges().iter().enumerate() {
                if open(i) && direction.spans(self.mask[self.dsu.find(e.a)]) {
                    inside += 1;
                }
            }
        }
        (k, inside)
    }
}

/// Monte Carlo estimate of the spanning probability, spanning-edge fraction and
/// mean spanning-cluster count, all from the same samples.
pub fn estimate_theta(
    lattice: &LatticeSpec,
    probs: &[f64],
    settings: &McSettings,
) -> Result<PercolationEstimate> {
    settings.check()?;
    check_probs(lattice, probs)?;
    let label = homogeneous_label(probs);
    let parts = exec::map_chunks(settings.exec, settings.samples, |start, end| {
        let mut scratch = Scratch::new(lattice);
        let mut tally = Tally::default();
        for s in start..end {
            rng::fill_uniforms(settings.seed, s, &mut scratch.uniforms);
            let u = std::mem::take(&mut scratch.uniforms);
            let (k, inside) = scratch.evaluate(lattice, |e| u[e] < probs[e], settings.direction);
            scratch.uniforms = u;
            tally.record(k, inside);
        }
        tally
    });
    let mut total = Tally::default();
    for part in &parts {
        total.merge(part);
    }
    Ok(total.finish(label, settings.samples, lattice.edge_count()))
}

/// Spanning-cluster count of sample `sample` under `seed`.
pub fn single_sample_spanning(
    lattice: &LatticeSpec,
    probs: &[f64],
    direction: Direction,
    seed: u64,
    sample: u64,
) -> u64 {
    let mut scratch = Scratch::new(lattice);
    rng::fill_uniforms(seed, sample, &mut scratch.uniforms);
    let u = std::mem::take(&mut scratch.uniforms);
    scratch.evaluate(lattice, |e| u[e] < probs[e], direction).0
}

fn homogeneous_label(probs: &[f64]) -> EdgeProbability {
    match probs.first() {
        Some(&p) if probs.iter().all(|&q| q == p) => EdgeProbability::Homogeneous(p),
        None => EdgeProbability::Homogeneous(0.0),
        _ => EdgeProbability::PerEdge,
    }
}

/// Mean fraction of edges that are open and belong to a spanning cluster.
pub fn estimate_p_infinity(
    lattice: &LatticeSpec,
    probs: &[f64],
    settings: &McSettings,
) -> Result<f64> {
    Ok(estimate_theta(lattice, probs, settings)?.p_infinity_hat)
}

/// Sample mean of the spanning-cluster count.
pub fn average_spanning_clusters(
    lattice: &LatticeSpec,
    probs: &[f64],
    settings: &McSettings,
) -> Result<f64> {
    Ok(estimate_theta(lattice, probs, settings)?.k_hat)
}

/// Probability of one exact configuration under independent edges.
pub fn config_probability(config: &BondConfiguration<'_>, probs: &[f64]) -> Result<f64> {
    if probs.len() != config.open().len() {
        return Err(Error::LengthMismatch {
            what: "edge probabilities",
            expected: config.open().len(),
            actual: probs.len(),
        });
    }
    Ok(config
        .open()
        .iter()
        .zip(probs)
        .map(|(&o, &p)| if o { p } else { 1.0 - p })
        .product())
}

/// Open edges whose endpoints lie in a spanning cluster, ascending.
pub fn spanning_edge_set(
    config: &BondConfiguration<'_>,
    labeling: &ClusterLabeling,
    direction: Direction,
) -> Vec<usize> {
    config
        .lattice()
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, e)| {
            config.is_open(*k) && labeling.is_spanning(labeling.cluster_of(e.a), direction)
        })
        .map(|(k, _)| k)
        .collect()
}

/// Product of the open probabilities over a spanning edge set; 0 when the set is empty.
pub fn literal_theta_product(spanning: &[usize], probs: &[f64]) -> f64 {
    if spanning.is_empty() {
        return 0.0;
    }
    spanning.iter().map(|&k| probs[k]).product()
}

/// Scaling limit `l^(2 - 3y)` of the mean spanning-cluster count.
pub fn theoretical_k_limit(l: usize, y: f64) -> Result<f64> {
    if l == 0 {
        return Err(Error::EmptyDesign);
    }
    check_exponent(y)?;
    Ok((l as f64).powf(2.0 - 3.0 * y))
}

pub fn check_exponent(y: f64) -> Result<()> {
    if !(0.0..=MAX_EXPONENT).contains(&y) {
        return Err(Error::validation("y", format!("{y} is outside [0, 2/3]")));
    }
    Ok(())
}

/// Exact expectations over all `2^E` configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactStats {
    pub theta: f64,
    pub p_infinity: f64,
    pub k_mean: f64,
}

pub fn exhaustive_enumerate(
    lattice: &LatticeSpec,
    probs: &[f64],
    direction: Direction,
) -> Result<ExactStats> {
    let e = lattice.edge_count();
    if e > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            edges: e,
            limit: ENUMERATION_LIMIT,
        });
    }
    check_probs(lattice, probs)?;
    let mut scratch = Scratch::new(lattice);
    let mut out = ExactStats {
        theta: 0.0,
        p_infinity: 0.0,
        k_mean: 0.0,
    };
    for bits in 0..(1u64 << e) {
        let cfg = BondConfiguration::from_bits(lattice, bits);
        let w = config_probability(&cfg, probs)?;
        if w == 0.0 {
            continue;
        }
        let (k, inside) = scratch.evaluate(lattice, |i| bits >> i & 1 == 1, direction);
        if k > 0 {
            out.theta += w;
        }
        out.k_mean += w * k as f64;
        if e > 0 {
            out.p_infinity += w * inside as f64 / e as f64;
        }
    }
    Ok(out)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for (i, p) in grid.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::validation(
                format!("grid[{i}]"),
                format!("{p} is not a probability"),
            ));
        }
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::validation("grid", "must be sorted ascending"));
    }
    Ok(())
}

/// Coupled sweep over homogeneous edge probabilities.
///
/// Row `i` is bit-identical to `estimate_theta` with every edge at `grid[i]`.
/// Each sample sorts its edges by uniform once and opens them in order while
/// walking the grid, tracking spanning clusters as clusters merge.
pub fn sweep(
    lattice: &LatticeSpec,
    grid: &[f64],
    settings: &McSettings,
) -> Result<Vec<PercolationEstimate>> {
    settings.check()?;
    check_grid(grid)?;
    let direction = settings.direction;
    let parts = exec::map_chunks(settings.exec, settings.samples, |start, end| {
        let mut scratch = Scratch::new(lattice);
        let mut tallies = vec![Tally::default(); grid.len()];
        let n = lattice.vertex_count();
        for s in start..end {
            rng::fill_uniforms(settings.seed, s, &mut scratch.uniforms);
            let u = &scratch.uniforms;
            scratch
                .order
                .sort_unstable_by(|&a, &b| u[a as usize].total_cmp(&u[b as usize]));
            scratch.dsu.reset(n);
            let mut span_count = 0u64;
            let mut span_edges = 0u64;
            for v in 0..n {
                scratch.mask[v] = lattice.boundary_mask(v);
                scratch.inner_edges[v] = 0;
                if direction.spans(scratch.mask[v]) {
                    span_count += 1;
                }
            }
            let mut next = 0;
            for (g, &p) in grid.iter().enumerate() {
                while next < scratch.order.len() && u[scratch.order[next] as usize] < p {
                    let edge = lattice.edges()[scratch.order[next] as usize];
                    next += 1;
                    let ra = scratch.dsu.find(edge.a);
                    let rb = scratch.dsu.find(edge.b);
                    if ra == rb {
                        scratch.inner_edges[ra] += 1;
                        if direction.spans(scratch.mask[ra]) {
                            span_edges += 1;
                        }
                        continue;
                    }
                    for r in [ra, rb] {
                        if direction.spans(scratch.mask[r]) {
                            span_count -= 1;
                            span_edges -= u64::from(scratch.inner_edges[r]);
                        }
                    }
                    let (root, absorbed) = scratch.dsu.union(ra, rb).expect("distinct roots");
                    scratch.mask[root] |= scratch.mask[absorbed];
                    scratch.inner_edges[root] += scratch.inner_edges[absorbed] + 1;
                    if direction.spans(scratch.mask[root]) {
                        span_count += 1;
                        span_edges += u64::from(scratch.inner_edges[root]);
                    }
                }
                tallies[g].record(span_count, span_edges);
            }
        }
        tallies
    });
    let mut totals = vec![Tally::default(); grid.len()];
    for part in &parts {
        for (t, p) in totals.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(totals
        .iter()
        .zip(grid)
        .map(|(t, &p)| {
            t.finish(
                EdgeProbability::Homogeneous(p),
                settings.samples,
                lattice.edge_count(),
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalEstimate {
    pub p_c_hat: f64,
    pub threshold: f64,
    /// `(p, theta_hat)` for every grid point.
    pub trace: Vec<(f64, f64)>,
    pub samples: u64,
    /// False when no grid point had `theta_hat <= threshold`; `p_c_hat` is then the first grid point.
    pub bracketed: bool,
}

/// Largest grid `p` whose estimated spanning probability is at most `threshold`.
pub fn estimate_pc(
    lattice: &LatticeSpec,
    grid: &[f64],
    threshold: f64,
    settings: &McSettings,
) -> Result<CriticalEstimate> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::validation(
            "epsilon",
            format!("{threshold} is outside [0, 1)"),
        ));
    }
    let rows = sweep(lattice, grid, settings)?;
    let trace: Vec<(f64, f64)> = grid
        .iter()
        .zip(&rows)
        .map(|(&p, r)| (p, r.theta_hat))
        .collect();
    let below = trace.iter().rev().find(|(_, t)| *t <= threshold).copied();
    Ok(CriticalEstimate {
        p_c_hat: below.map_or(grid[0], |(p, _)| p),
        threshold,
        trace,
        samples: settings.samples,
        bracketed: below.is_some(),
    })
}

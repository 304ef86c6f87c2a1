//! Resiliency scoring of candidate designs on 2D bond-percolation lattices,
//! with regret accounting over design sets and bandit-driven selection.
//!
//! A design's notions are placed row-major on the squarest lattice that holds
//! them; edges between adjacent notions open independently with the design's
//! pairwise probability. The resiliency reward is the expected number of
//! spanning clusters, estimated by coupled Monte Carlo sampling.

pub mod bandit;
pub mod design;
pub mod dsu;
pub mod error;
pub mod exec;
pub mod lattice;
pub mod percolation;
pub mod rng;

pub use bandit::{ArmSet, ArmSpec, BanditState, Policy, RegretTrace, Schedule};
pub use design::{Design, Lambda, RegretSummary, ResiliencyReport};
pub use error::{Error, Result};
pub use exec::Execution;
pub use lattice::{BondConfiguration, ClusterLabeling, Direction, LatticeSpec};
pub use percolation::{CriticalEstimate, McSettings, PercolationEstimate};

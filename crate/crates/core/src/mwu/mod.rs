//! Small-space LP solving with multiplicative weights: the engine, region growing, and the
//! multicut and min-disagree solvers built on them.

pub mod engine;
pub mod min_disagree;
pub mod multicut;
pub mod region;

use serde::{Deserialize, Serialize};

pub use engine::{DualCandidate, MwuState, OracleOutcome};
pub use min_disagree::{min_disagree_solve, MinDisagreeOutcome};
pub use multicut::{multicut_solve, MulticutOutcome};
pub use region::{region_grow, Ball, BallDecomposition, LengthEdge};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    /// Overrides `delta = eps / 8`.
    pub delta: Option<f64>,
    pub seed: u64,
    /// Sparsifier oversampling constant.
    pub oversample: f64,
    /// Overrides the iteration bound `T`.
    pub max_iterations: Option<usize>,
}

impl SolverConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        SolverConfig { eps, delta: None, seed, oversample: 8.0, max_iterations: None }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.eps / 8.0)
    }
}

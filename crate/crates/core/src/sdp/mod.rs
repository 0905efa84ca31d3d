//! Max-agree through a vector relaxation on the sparsifier: the separation oracle, a matrix
//! multiplicative-weights solver driven by it, and hyperplane rounding.

pub mod mmw;
pub mod oracle;
pub mod round;
pub mod solve;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::graph::{Clustering, NodeId};

pub use mmw::{mmw_solve, MmwOutcome, MmwResult};
pub use oracle::{sdp_oracle, OracleReport, OracleVerdict, Survivors};
pub use round::{hyperplane_labels, round_solution, Rounded, RoundingChoice};
pub use solve::{solve_max_agree, AlphaProbe, MaxAgreeOutcome};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SdpConfig {
    pub eps: f64,
    /// Overrides `delta = eps / 4`.
    pub delta: Option<f64>,
    pub seed: u64,
    /// Sparsifier oversampling constant.
    pub oversample: f64,
    /// Random-hyperplane trials per hyperplane count.
    pub trials: usize,
    /// Overrides the iteration budget of each solver run.
    pub max_iterations: Option<usize>,
    /// Gaussian projection dimension for the Gram factor; exact when unset.
    pub projection_dim: Option<usize>,
    /// Taylor degree replacing the exact exponential; exact when unset.
    pub precision: Option<usize>,
}

impl SdpConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        SdpConfig {
            eps,
            delta: None,
            seed,
            oversample: 8.0,
            trials: 200,
            max_iterations: None,
            projection_dim: None,
            precision: None,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta.unwrap_or(self.eps / 4.0)
    }
}

/// Objective `C` on the sparsified graph restricted to non-isolated nodes. Local index `i`
/// stands for node `nodes[i]`; edge weights keep their sign.
#[derive(Clone, Debug)]
pub struct SdpObjective {
    pub n: usize,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<(usize, usize, f64)>,
    /// `d_i`, the absolute weighted degree.
    pub degree: Vec<f64>,
    /// `W = sum_i d_i / 2`.
    pub total_weight: f64,
}

impl SdpObjective {
    pub fn new<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId, f64)>,
    {
        let raw: Vec<_> = edges.into_iter().filter(|e| e.0 != e.1 && e.2 != 0.0).collect();
        let mut local = vec![usize::MAX; n];
        let mut nodes = Vec::new();
        for &(u, v, _) in &raw {
            for x in [u, v] {
                if local[x] == usize::MAX {
                    local[x] = 0;
                }
            }
        }
        for (x, l) in local.iter_mut().enumerate() {
            if *l != usize::MAX {
                *l = nodes.len();
                nodes.push(x);
            }
        }
        let mut degree = vec![0.0; nodes.len()];
        let edges: Vec<_> = raw
            .iter()
            .map(|&(u, v, w)| {
                degree[local[u]] += w.abs();
                degree[local[v]] += w.abs();
                (local[u], local[v], w)
            })
            .collect();
        let total_weight = degree.iter().sum::<f64>() / 2.0;
        SdpObjective { n, nodes, edges, degree, total_weight }
    }

    pub fn active(&self) -> usize {
        self.nodes.len()
    }

    /// `D_ii = d_i / 2W`.
    pub fn diag_scale(&self) -> Vec<f64> {
        self.degree.iter().map(|d| d / (2.0 * self.total_weight)).collect()
    }

    /// `C o X`.
    pub fn value(&self, x: &GramFactor) -> f64 {
        self.edges.iter().map(|&(i, j, w)| edge_value(x, i, j, w)).sum()
    }

    /// Exact agreement of a clustering of the local nodes.
    pub fn agreement(&self, c: &Clustering) -> f64 {
        crate::graph::eval::agree_of(self.edges.iter().copied(), c)
    }

    /// Extends a clustering of the local nodes to all `n` nodes, isolated nodes alone.
    pub fn lift(&self, c: &Clustering) -> Clustering {
        let mut raw: Vec<usize> = (0..self.n).map(|v| c.k() + v).collect();
        for (i, &v) in self.nodes.iter().enumerate() {
            raw[v] = c.label(i);
        }
        Clustering::from_labels(&raw)
    }
}

pub(crate) fn edge_value(x: &GramFactor, i: usize, j: usize, w: f64) -> f64 {
    if w > 0.0 {
        w * x.dot(i, j)
    } else {
        -w * (x.norm2(i) + x.norm2(j) - 2.0 * x.dot(i, j)) / 2.0
    }
}

/// Rows are the vectors `x_i`, so `X = F F^T`.
#[derive(Clone, Debug)]
pub struct GramFactor {
    pub rows: DMatrix<f64>,
}

impl GramFactor {
    pub fn new(rows: DMatrix<f64>) -> Self {
        GramFactor { rows }
    }

    pub fn from_vectors(vs: &[Vec<f64>]) -> Self {
        let d = vs.first().map_or(0, Vec::len);
        GramFactor { rows: DMatrix::from_fn(vs.len(), d, |i, k| vs[i][k]) }
    }

    /// Orthonormal vectors, `X = I`.
    pub fn identity(n: usize) -> Self {
        GramFactor { rows: DMatrix::identity(n, n) }
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn dot(&self, i: usize, j: usize) -> f64 {
        self.rows.row(i).dot(&self.rows.row(j))
    }

    pub fn norm2(&self, i: usize) -> f64 {
        self.rows.row(i).norm_squared()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        &self.rows * self.rows.transpose()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    S1,
    S2,
    S3,
    Objective,
}

/// Sparse symmetric `A` with scalar `b`. Each entry `(i, j, a)` with `i <= j` sets
/// `A_ij = A_ji = a`.
#[derive(Clone, Debug)]
pub struct Hyperplane {
    pub entries: Vec<(usize, usize, f64)>,
    pub b: f64,
    pub provenance: Provenance,
}

impl Hyperplane {
    /// `A o X`.
    pub fn apply(&self, x: &GramFactor) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, a)| if i == j { a * x.norm2(i) } else { 2.0 * a * x.dot(i, j) })
            .sum()
    }

    pub fn apply_matrix(&self, y: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, a)| if i == j { a * y[(i, i)] } else { 2.0 * a * y[(i, j)] })
            .sum()
    }

    pub fn to_matrix(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, a) in &self.entries {
            m[(i, j)] += a;
            if i != j {
                m[(j, i)] += a;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isolated_nodes_are_dropped_and_lifted_alone() {
        let obj = SdpObjective::new(5, [(0, 2, 1.0), (2, 4, -2.0)]);
        assert_eq!(obj.nodes, vec![0, 2, 4]);
        assert_eq!(obj.degree, vec![1.0, 3.0, 2.0]);
        assert_eq!(obj.total_weight, 3.0);
        let d: f64 = obj.diag_scale().iter().sum();
        assert!((d - 1.0).abs() < 1e-12);
        let c = obj.lift(&Clustering::one_cluster(3));
        assert!(c.same(0, 2) && c.same(2, 4));
        assert!(!c.same(0, 1) && !c.same(1, 3));
    }

    #[test]
    fn objective_on_integral_solutions_counts_agreements() {
        let obj = SdpObjective::new(3, [(0, 1, 2.0), (1, 2, -1.0), (0, 2, -3.0)]);
        // {0,1} together, 2 apart: coincident vectors for 0 and 1, orthogonal for 2
        let x = GramFactor::from_vectors(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let c = Clustering::from_labels(&[0, 0, 1]);
        assert!((obj.value(&x) - obj.agreement(&c)).abs() < 1e-12);
        assert_eq!(obj.agreement(&c), 6.0);
    }
}

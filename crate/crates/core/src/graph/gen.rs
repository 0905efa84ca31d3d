//! Seeded instance generators, including the lower-bound gadget graphs.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stream::StreamSource;
use super::{ordered, Clustering, EdgeUpdate, NodeId, WeightClass};
use crate::error::{Error, Result};
use crate::hash::rng_for;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceKind {
    /// Complete unit graph agreeing with a balanced random k-clustering, each sign flipped
    /// independently with probability `flip`.
    Planted { k: usize, flip: f64 },
    /// Complete unit graph with exactly `repairs` flipped pairs relative to the planting.
    PlantedRepair { k: usize, repairs: usize },
    /// Each pair present with probability `density`, random sign, |w| uniform in 1..=w_star.
    RandomSigned { density: f64, w_star: u64 },
    /// Sparse planted graph: positive pairs inside clusters with probability `p_in`,
    /// negative pairs across with probability `p_out`.
    SparsePlanted { k: usize, p_in: f64, p_out: f64 },
    /// Negative edges on v_0..v_{n-2} from a random bit string x, then positive edges from
    /// u = n-1 to v_i and v_j. `bit` forces x_ij.
    IndexGadget { bit: Option<bool> },
    /// Triples (a_i, b_i, c_i) over n = 3m nodes: a_i b_i has sign from x_i, b_i c_i from
    /// y_i, everything else negative. `intersecting` forces whether some x_i = y_i = 1.
    DisjGadget { intersecting: Option<bool> },
    /// Negative edges a_u b_v for x_uv = 1 over n = 2m nodes; the query clustering
    /// {a_i b_j}, {other a}, {other b} disagrees on exactly x_ij.
    ThreeClusterGadget,
    Path,
    /// k balanced positive cliques, optionally with every cross pair negative.
    Cliques { k: usize, negatives: bool },
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub source: StreamSource,
    pub planted: Option<Clustering>,
    /// Distinguished query clustering for the three-cluster gadget.
    pub query: Option<Clustering>,
    /// For gadgets: whether the construction forces a zero-cost answer.
    pub expect_zero: Option<bool>,
}

impl Instance {
    fn plain(source: StreamSource) -> Self {
        Instance { source, planted: None, query: None, expect_zero: None }
    }
}

fn check_prob(p: f64, name: &str) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {p} is not a probability")))
    }
}

fn balanced_labels<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

fn inserts(edges: Vec<(NodeId, NodeId, i64)>) -> Vec<EdgeUpdate> {
    edges.into_iter().map(|(u, v, w)| EdgeUpdate::insert(u, v, w)).collect()
}

pub fn gen_instance(kind: &InstanceKind, n: usize, seed: u64) -> Result<Instance> {
    let mut rng = rng_for(seed, "gen-instance");
    let rng = &mut rng;
    let unit = WeightClass::Unit;
    match *kind {
        InstanceKind::Planted { k, flip } => {
            check_prob(flip, "flip")?;
            if k == 0 || k > n.max(1) {
                return Err(Error::InvalidInput(format!("planted k = {k} with n = {n}")));
            }
            let labels = balanced_labels(n, k, rng);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    let mut w = if labels[u] == labels[v] { 1 } else { -1 };
                    if rng.random_bool(flip) {
                        w = -w;
                    }
                    edges.push((u, v, w));
                }
            }
            edges.shuffle(rng);
            let source = StreamSource::new(n, unit, inserts(edges))?;
            Ok(Instance { planted: Some(Clustering::from_labels(&labels)), ..Instance::plain(source) })
        }
        InstanceKind::PlantedRepair { k, repairs } => {
            let pairs = n * n.saturating_sub(1) / 2;
            if k == 0 || k > n.max(1) || repairs > pairs {
                return Err(Error::InvalidInput(format!("planted-repair k = {k}, repairs = {repairs}, n = {n}")));
            }
            let labels = balanced_labels(n, k, rng);
            let mut all: Vec<(NodeId, NodeId)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            all.shuffle(rng);
            let flipped: HashSet<_> = all[..repairs].iter().copied().collect();
            let mut edges: Vec<_> = all
                .iter()
                .map(|&(u, v)| {
                    let w = if labels[u] == labels[v] { 1 } else { -1 };
                    (u, v, if flipped.contains(&(u, v)) { -w } else { w })
                })
                .collect();
            edges.shuffle(rng);
            let source = StreamSource::new(n, unit, inserts(edges))?;
            Ok(Instance { planted: Some(Clustering::from_labels(&labels)), ..Instance::plain(source) })
        }
        InstanceKind::RandomSigned { density, w_star } => {
            check_prob(density, "density")?;
            if w_star == 0 {
                return Err(Error::InvalidInput("w_star must be at least 1".into()));
            }
            let wc = if w_star == 1 { unit } else { WeightClass::Bounded { w_star } };
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(density) {
                        let mag = rng.random_range(1..=w_star) as i64;
                        let w = if rng.random_bool(0.5) { mag } else { -mag };
                        edges.push((u, v, w));
                    }
                }
            }
            edges.shuffle(rng);
            Ok(Instance::plain(StreamSource::new(n, wc, inserts(edges))?))
        }
        InstanceKind::SparsePlanted { k, p_in, p_out } => {
            check_prob(p_in, "p_in")?;
            check_prob(p_out, "p_out")?;
            if k == 0 || k > n.max(1) {
                return Err(Error::InvalidInput(format!("sparse-planted k = {k} with n = {n}")));
            }
            let labels = balanced_labels(n, k, rng);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if labels[u] == labels[v] {
                        if rng.random_bool(p_in) {
                            edges.push((u, v, 1));
                        }
                    } else if rng.random_bool(p_out) {
                        edges.push((u, v, -1));
                    }
                }
            }
            edges.shuffle(rng);
            let source = StreamSource::new(n, unit, inserts(edges))?;
            Ok(Instance { planted: Some(Clustering::from_labels(&labels)), ..Instance::plain(source) })
        }
        InstanceKind::IndexGadget { bit } => {
            if n < 3 {
                return Err(Error::InvalidInput("index gadget needs n >= 3".into()));
            }
            let m = n - 1;
            let u = m;
            let i = rng.random_range(0..m);
            let mut j = rng.random_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            let (i, j) = ordered(i, j);
            let mut edges = Vec::new();
            let mut x_ij = false;
            for a in 0..m {
                for b in a + 1..m {
                    let mut x = rng.random_bool(0.5);
                    if (a, b) == (i, j) {
                        x = bit.unwrap_or(x);
                        x_ij = x;
                    }
                    if x {
                        edges.push((a, b, -1));
                    }
                }
            }
            // Bob's half of the protocol arrives after Alice's
            edges.push((u, i, 1));
            edges.push((u, j, 1));
            let source = StreamSource::new(n, unit, inserts(edges))?;
            Ok(Instance { expect_zero: Some(!x_ij), ..Instance::plain(source) })
        }
        InstanceKind::DisjGadget { intersecting } => {
            if n == 0 || n % 3 != 0 {
                return Err(Error::InvalidInput(format!("disjointness gadget needs n divisible by 3, got {n}")));
            }
            let m = n / 3;
            let mut x: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
            let mut y: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
            match intersecting {
                Some(false) => {
                    for i in 0..m {
                        if x[i] && y[i] {
                            y[i] = false;
                        }
                    }
                }
                Some(true) => {
                    let i = rng.random_range(0..m);
                    x[i] = true;
                    y[i] = true;
                }
                None => {}
            }
            let (a, b, c) = (|i: usize| 3 * i, |i: usize| 3 * i + 1, |i: usize| 3 * i + 2);
            let sign = |bit: bool| if bit { 1 } else { -1 };
            let mut edges: Vec<_> = (0..m).map(|i| (a(i), b(i), sign(x[i]))).collect();
            for i in 0..m {
                edges.push((b(i), c(i), sign(y[i])));
                edges.push((a(i), c(i), -1));
            }
            for i in 0..m {
                for j in i + 1..m {
                    for p in 3 * i..3 * i + 3 {
                        for q in 3 * j..3 * j + 3 {
                            edges.push((p, q, -1));
                        }
                    }
                }
            }
            let hit = (0..m).any(|i| x[i] && y[i]);
            let source = StreamSource::new(n, unit, inserts(edges))?;
            Ok(Instance { expect_zero: Some(!hit), ..Instance::plain(source) })
        }
        InstanceKind::ThreeClusterGadget => {
            if n < 2 || n % 2 != 0 {
                return Err(Error::InvalidInput(format!("three-cluster gadget needs even n >= 2, got {n}")));
            }
            let m = n / 2;
            let mut edges = Vec::new();
            let i = rng.random_range(0..m);
            let j = rng.random_range(0..m);
            let mut x_ij = false;
            for a in 0..m {
                for b in 0..m {
                    let x = rng.random_bool(0.5);
                    if (a, b) == (i, j) {
                        x_ij = x;
                    }
                    if x {
                        edges.push((a, m + b, -1));
                    }
                }
            }
            let labels: Vec<usize> = (0..n)
                .map(|v| if v == i || v == m + j { 0 } else if v < m { 1 } else { 2 })
                .collect();
            let source = StreamSource::new(n, unit, inserts(edges))?;
            Ok(Instance {
                query: Some(Clustering::from_labels(&labels)),
                expect_zero: Some(!x_ij),
                ..Instance::plain(source)
            })
        }
        InstanceKind::Path => {
            let edges = (1..n).map(|v| (v - 1, v, 1)).collect();
            Ok(Instance { planted: Some(Clustering::one_cluster(n)), ..Instance::plain(StreamSource::new(n, unit, inserts(edges))?) })
        }
        InstanceKind::Cliques { k, negatives } => {
            if k == 0 || k > n.max(1) {
                return Err(Error::InvalidInput(format!("cliques k = {k} with n = {n}")));
            }
            let labels: Vec<usize> = (0..n).map(|v| v * k / n).collect();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if labels[u] == labels[v] {
                        edges.push((u, v, 1));
                    } else if negatives {
                        edges.push((u, v, -1));
                    }
                }
            }
            let source = StreamSource::new(n, unit, inserts(edges))?;
            Ok(Instance { planted: Some(Clustering::from_labels(&labels)), ..Instance::plain(source) })
        }
    }
}

/// Interleaves `extra` insert/delete pairs on pairs the stream never touches, so the net
/// graph is unchanged but the stream is fully dynamic.
pub fn with_churn(src: &StreamSource, extra: usize, seed: u64) -> Result<StreamSource> {
    let n = src.n();
    let touched: HashSet<_> = src.updates().iter().map(|e| e.key()).collect();
    let free = n * n.saturating_sub(1) / 2 - touched.len();
    if extra > free {
        return Err(Error::InvalidInput(format!("only {free} untouched pairs for {extra} churn edges")));
    }
    let mut rng = rng_for(seed, "churn");
    let wmax = src.weight_class().w_star();
    let mut chosen = HashSet::new();
    while chosen.len() < extra {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v && !touched.contains(&ordered(u, v)) {
            chosen.insert(ordered(u, v));
        }
    }
    let mut chosen: Vec<_> = chosen.into_iter().collect();
    chosen.sort_unstable();
    let mut out = src.updates().to_vec();
    for (u, v) in chosen {
        let mag = rng.random_range(1..=wmax) as i64;
        let w = if rng.random_bool(0.5) { mag } else { -mag };
        let a = rng.random_range(0..=out.len());
        out.insert(a, EdgeUpdate::insert(u, v, w));
        let b = rng.random_range(a + 1..=out.len());
        out.insert(b, EdgeUpdate::delete(u, v, w));
    }
    StreamSource::new(n, src.weight_class(), out)
}

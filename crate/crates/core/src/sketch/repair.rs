//! Cluster Repair: recover the optimal clustering of a unit-weight graph promised to be
//! within `t` edge edits of a disjoint union of cliques.
//!
//! One pass builds a spanning forest of the positive edges and a bilinear sketch. Every
//! forest reachable by adding `t1` edges and then removing `t2` forest edges,
//! `t1 + t2 <= t`, is turned into a partition, and the partition with the smallest
//! sketched disagreement is returned.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::bilinear::{BilinearParams, BilinearSketch};
use crate::error::{Error, Result};
use crate::graph::stream::StreamSource;
use crate::graph::{Clustering, NodeId, Op};
use crate::union_find::UnionFind;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RepairConfig {
    pub t: usize,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    /// Refuse when more candidate forests than this could be generated.
    pub max_candidates: u64,
    /// Refuse when `candidates * n * repetitions` exceeds this.
    pub max_work: u64,
}

impl RepairConfig {
    pub fn new(t: usize, eps: f64, delta: f64, seed: u64) -> Self {
        RepairConfig { t, eps, delta, seed, max_candidates: 2_000_000, max_work: 40_000_000_000 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub clustering: Clustering,
    pub estimate: f64,
    /// Distinct partitions queried.
    pub candidates: usize,
    pub forest_edges: usize,
    pub repetitions: usize,
    /// Deletions were present, so the forest was built from retained positive edges.
    pub forest_from_retained_edges: bool,
    pub state_words: usize,
}

/// `sum over t1 + t2 <= t of n^(2 t1 + t2)`, the a-priori count of candidate forests.
pub fn candidate_bound(n: usize, t: usize) -> f64 {
    let n = n as f64;
    let mut p = 0.0;
    for t1 in 0..=t {
        for t2 in 0..=t - t1 {
            p += n.powi((2 * t1 + t2) as i32);
        }
    }
    p
}

/// Sketch accuracy used internally: `(1 + eps/3) / (1 - eps/3) <= 1 + eps` for eps <= 1,
/// and the failure probability is split evenly between the forest (deterministic here)
/// and a union bound over `n` times the a-priori candidate count.
pub fn sketch_params(n: usize, cfg: &RepairConfig) -> Result<BilinearParams> {
    let p = candidate_bound(n.max(2), cfg.t);
    BilinearParams::new(cfg.eps / 3.0, cfg.delta / (2.0 * p * n.max(2) as f64))
}

fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn cluster_repair(src: &mut StreamSource, cfg: &RepairConfig) -> Result<RepairOutcome> {
    if !src.weight_class().is_unit() {
        return Err(Error::UnsupportedWeightClass(format!(
            "cluster repair needs unit weights, stream is {}",
            src.weight_class()
        )));
    }
    if !(cfg.eps > 0.0 && cfg.eps <= 1.0) {
        return Err(Error::InvalidInput(format!("cluster repair needs 0 < eps <= 1, got {}", cfg.eps)));
    }
    let n = src.n();
    let params = sketch_params(n, cfg)?;
    let mut sketch = BilinearSketch::new(n, params, cfg.seed);
    let table = sketch.sign_table();
    let dynamic = !src.is_insert_only();

    let mut uf = UnionFind::new(n);
    let mut forest: Vec<(NodeId, NodeId)> = Vec::new();
    let mut retained: HashMap<(NodeId, NodeId), i64> = HashMap::new();
    for e in src.pass() {
        sketch.update_with(&table, &e)?;
        if e.weight > 0 {
            if dynamic {
                *retained.entry(e.key()).or_insert(0) += if e.op == Op::Insert { 1 } else { -1 };
            } else if uf.union(e.u, e.v) {
                forest.push(e.key());
            }
        }
    }
    if dynamic {
        let mut live: Vec<_> = retained.into_iter().filter(|&(_, c)| c > 0).map(|(k, _)| k).collect();
        live.sort_unstable();
        for (u, v) in live {
            if uf.union(u, v) {
                forest.push((u, v));
            }
        }
    }

    let comp = uf.labels();
    let mut sizes: HashMap<usize, u64> = HashMap::new();
    for &c in &comp {
        *sizes.entry(c).or_insert(0) += 1;
    }
    let cross_pairs = ((n as u64) * (n as u64) - sizes.values().map(|s| s * s).sum::<u64>()) / 2;
    let f = forest.len() as u64;
    let mut count = 0.0;
    for t1 in 0..=cfg.t as u64 {
        let adds = binom(cross_pairs, t1);
        let removes: f64 = (0..=cfg.t as u64 - t1).map(|t2| binom(f + t1, t2)).sum();
        count += adds * removes;
    }
    let reps = sketch.repetitions();
    let work = count * n as f64 * reps as f64;
    if count > cfg.max_candidates as f64 || work > cfg.max_work as f64 {
        return Err(Error::Refused(format!(
            "cluster repair with t = {} would generate up to {count:.3e} candidate forests \
             ({cross_pairs} cross-component pairs, {f} forest edges), {work:.3e} query operations \
             at {reps} repetitions; caps are {} candidates and {} operations",
            cfg.t, cfg.max_candidates, cfg.max_work
        )));
    }

    let mut seen: HashSet<Clustering> = HashSet::new();
    let mut order: Vec<Clustering> = Vec::new();
    let mut added: Vec<(NodeId, NodeId)> = Vec::new();
    enumerate_additions(n, cfg.t, &forest, &uf, 0, &mut added, &mut |fp: &[(NodeId, NodeId)], budget| {
        enumerate_removals(n, fp, budget, &mut |c| {
            if seen.insert(c.clone()) {
                order.push(c);
            }
        });
    });

    let mut best: Option<(f64, Clustering)> = None;
    for c in order.iter() {
        let est = sketch.query_with(&table, c);
        if best.as_ref().is_none_or(|(b, _)| est < *b) {
            best = Some((est, c.clone()));
        }
    }
    let (estimate, clustering) = best.expect("the unmodified forest is always a candidate");
    Ok(RepairOutcome {
        clustering,
        estimate,
        candidates: order.len(),
        forest_edges: forest.len(),
        repetitions: reps,
        forest_from_retained_edges: dynamic,
        state_words: sketch.state_words() + 2 * forest.len() + n,
    })
}

/// Visits every forest `F + A` where `A` is a set of at most `t` node pairs, listed in
/// lexicographic order after `start`, each joining two different trees.
fn enumerate_additions(
    n: usize,
    t: usize,
    forest: &[(NodeId, NodeId)],
    uf: &UnionFind,
    start: usize,
    added: &mut Vec<(NodeId, NodeId)>,
    visit: &mut dyn FnMut(&[(NodeId, NodeId)], usize),
) {
    let mut fp: Vec<_> = forest.to_vec();
    fp.extend_from_slice(added);
    visit(&fp, t - added.len());
    if added.len() == t {
        return;
    }
    let mut cur = uf.clone();
    for idx in start..n * n {
        let (u, v) = (idx / n, idx % n);
        if u >= v || cur.find(u) == cur.find(v) {
            continue;
        }
        let mut next = cur.clone();
        next.union(u, v);
        added.push((u, v));
        enumerate_additions(n, t, forest, &next, idx + 1, added, visit);
        added.pop();
    }
}

/// Visits the components of `fp` minus every subset of at most `budget` of its edges.
fn enumerate_removals(n: usize, fp: &[(NodeId, NodeId)], budget: usize, visit: &mut dyn FnMut(Clustering)) {
    let mut removed = vec![false; fp.len()];
    fn rec(
        n: usize,
        fp: &[(NodeId, NodeId)],
        removed: &mut [bool],
        start: usize,
        left: usize,
        visit: &mut dyn FnMut(Clustering),
    ) {
        let mut uf = UnionFind::new(n);
        for (i, &(u, v)) in fp.iter().enumerate() {
            if !removed[i] {
                uf.union(u, v);
            }
        }
        visit(Clustering::from_labels(&uf.labels()));
        if left == 0 {
            return;
        }
        for i in start..fp.len() {
            removed[i] = true;
            rec(n, fp, removed, i + 1, left - 1, visit);
            removed[i] = false;
        }
    }
    rec(n, fp, &mut removed, 0, budget, visit);
}

//! Exact optima by exhaustive search over set partitions.
//!
//! Partitions are enumerated as restricted-growth strings with branch-and-bound: the cost
//! of every unassigned node against the assigned prefix is a valid lower bound on what the
//! completion must still pay.

use serde::{Deserialize, Serialize};

use super::eval::exact_disagree;
use super::{Clustering, GraphSnapshot, NodeId};
use crate::error::{Error, Result};
use crate::union_find::UnionFind;

pub const DEFAULT_NODE_CAP: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    MinDisagree,
    MaxAgree,
}

/// Optimal clustering and its objective value, over all partitions or all partitions with
/// at most `k` clusters.
pub fn brute_force_opt(s: &GraphSnapshot, objective: Objective, k: Option<usize>) -> Result<(Clustering, u64)> {
    brute_force_opt_capped(s, objective, k, DEFAULT_NODE_CAP)
}

pub fn brute_force_opt_capped(
    s: &GraphSnapshot,
    objective: Objective,
    k: Option<usize>,
    cap: usize,
) -> Result<(Clustering, u64)> {
    if s.n > cap {
        return Err(Error::Refused(format!(
            "brute force over n = {} nodes exceeds the node cap {cap}",
            s.n
        )));
    }
    if k == Some(0) {
        return Err(Error::InvalidInput("cluster cap k must be at least 1".into()));
    }
    let (c, d) = min_disagree(s, k.unwrap_or(s.n.max(1)));
    let value = match objective {
        Objective::MinDisagree => d,
        Objective::MaxAgree => s.total_abs_weight() - d,
    };
    Ok((c, value))
}

struct Search {
    n: usize,
    k_cap: usize,
    order: Vec<usize>,
    // edges from a position to later positions
    upper: Vec<Vec<(usize, i64)>>,
    labels: Vec<usize>,
    // per position, per label: positive / negative weight to assigned nodes with that label
    pos_in: Vec<Vec<u64>>,
    neg_in: Vec<Vec<u64>>,
    pos_assigned: Vec<u64>,
    best_cost: u64,
    best: Vec<usize>,
}

impl Search {
    fn place_cost(&self, p: usize, c: usize, used: usize) -> u64 {
        if c == used {
            self.pos_assigned[p]
        } else {
            self.pos_assigned[p] - self.pos_in[p][c] + self.neg_in[p][c]
        }
    }

    fn lower_bound(&self, from: usize, used: usize) -> u64 {
        let allow_new = used < self.k_cap;
        (from..self.n)
            .map(|p| {
                let mut m = if allow_new { self.pos_assigned[p] } else { u64::MAX };
                for c in 0..used {
                    m = m.min(self.place_cost(p, c, used));
                }
                m
            })
            .sum()
    }

    fn assign(&mut self, p: usize, c: usize, sign: i64) {
        for &(q, w) in &self.upper[p] {
            let a = w.unsigned_abs();
            let apply = |x: &mut u64| {
                if sign > 0 {
                    *x += a
                } else {
                    *x -= a
                }
            };
            if w > 0 {
                apply(&mut self.pos_in[q][c]);
                apply(&mut self.pos_assigned[q]);
            } else {
                apply(&mut self.neg_in[q][c]);
            }
        }
    }

    fn dfs(&mut self, p: usize, used: usize, cost: u64) {
        if cost >= self.best_cost {
            return;
        }
        if p == self.n {
            self.best_cost = cost;
            self.best.clone_from(&self.labels);
            return;
        }
        if cost + self.lower_bound(p, used) >= self.best_cost {
            return;
        }
        let top = if used < self.k_cap { used + 1 } else { used };
        // try cheaper labels first so good incumbents appear early
        let mut choices: Vec<(u64, usize)> = (0..top).map(|c| (self.place_cost(p, c, used), c)).collect();
        choices.sort_unstable();
        for (add, c) in choices {
            self.labels[p] = c;
            self.assign(p, c, 1);
            self.dfs(p + 1, used.max(c + 1), cost + add);
            self.assign(p, c, -1);
        }
    }
}

fn min_disagree(s: &GraphSnapshot, k_cap: usize) -> (Clustering, u64) {
    let n = s.n;
    if n == 0 {
        return (Clustering::from_labels(&[]), 0);
    }
    let adj = s.adjacency();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(adj[v].iter().map(|e| e.1.unsigned_abs()).sum::<u64>()), v));
    let mut pos = vec![0; n];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    let mut upper = vec![Vec::new(); n];
    for (u, v, w) in s.edges() {
        let (a, b) = (pos[u].min(pos[v]), pos[u].max(pos[v]));
        upper[a].push((b, w));
    }
    let one = Clustering::one_cluster(n);
    let mut best_cost = exact_disagree(s, &one);
    let mut best = vec![0; n];
    if k_cap >= n {
        let single = exact_disagree(s, &Clustering::singletons(n));
        if single < best_cost {
            best_cost = single;
            best = (0..n).collect();
            // `best` is indexed by position, singletons are position-invariant
        }
    }
    let kk = k_cap.min(n);
    let mut search = Search {
        n,
        k_cap: kk,
        order,
        upper,
        labels: vec![0; n],
        pos_in: vec![vec![0; kk + 1]; n],
        neg_in: vec![vec![0; kk + 1]; n],
        pos_assigned: vec![0; n],
        best_cost,
        best,
    };
    search.dfs(0, 0, 0);
    let mut raw = vec![0; n];
    for (p, &v) in search.order.iter().enumerate() {
        raw[v] = search.best[p];
    }
    (Clustering::from_labels(&raw), search.best_cost)
}

/// Edge-subset cap for [`brute_force_multicut`].
pub const MULTICUT_EDGE_CAP: usize = 24;

/// Cheapest set of positive edges whose removal separates every pair, by enumerating edge
/// subsets. Returns the removed-edge mask and its weight.
pub fn brute_force_multicut(s: &GraphSnapshot, pairs: &[(NodeId, NodeId)]) -> Result<(Vec<bool>, u64)> {
    let edges: Vec<(NodeId, NodeId, i64)> = s.edges().collect();
    if let Some(e) = edges.iter().find(|e| e.2 <= 0) {
        return Err(Error::InvalidInput(format!("multicut needs positive weights, got {} on ({}, {})", e.2, e.0, e.1)));
    }
    if let Some(&(a, b)) = pairs.iter().find(|&&(a, b)| a == b || a >= s.n || b >= s.n) {
        return Err(Error::InvalidInput(format!("pair ({a}, {b}) is not two distinct nodes below n = {}", s.n)));
    }
    if edges.len() > MULTICUT_EDGE_CAP {
        return Err(Error::Refused(format!(
            "exhaustive multicut over {} edges exceeds the cap {MULTICUT_EDGE_CAP}",
            edges.len()
        )));
    }
    let m = edges.len();
    let mut best: Option<(u64, u32)> = None;
    for mask in 0u32..(1u32 << m) {
        let cost: u64 = (0..m).filter(|i| mask >> i & 1 == 1).map(|i| edges[i].2 as u64).sum();
        if best.is_some_and(|(b, _)| cost >= b) {
            continue;
        }
        let mut uf = UnionFind::new(s.n);
        for (i, e) in edges.iter().enumerate() {
            if mask >> i & 1 == 0 {
                uf.union(e.0, e.1);
            }
        }
        if pairs.iter().all(|&(a, b)| uf.find(a) != uf.find(b)) {
            best = Some((cost, mask));
        }
    }
    let (cost, mask) = best.expect("cutting every edge separates all distinct pairs");
    Ok(((0..m).map(|i| mask >> i & 1 == 1).collect(), cost))
}

//! Test-side oracles written without the library's search or evaluation code.

#![allow(dead_code)]

use std::collections::VecDeque;

use ccstream::{GraphSnapshot, StreamSource};

pub type Edge = (usize, usize, i64);

pub fn edges_of(src: &StreamSource) -> (usize, Vec<Edge>) {
    let s: GraphSnapshot = src.oracle_snapshot();
    (s.n, s.edges().collect())
}

pub fn disagree(edges: &[Edge], labels: &[usize]) -> u64 {
    edges
        .iter()
        .map(|&(u, v, w)| {
            let same = labels[u] == labels[v];
            if (w > 0) != same {
                w.unsigned_abs()
            } else {
                0
            }
        })
        .sum()
}

pub fn total(edges: &[Edge]) -> u64 {
    edges.iter().map(|e| e.2.unsigned_abs()).sum()
}

pub fn agree(edges: &[Edge], labels: &[usize]) -> u64 {
    total(edges) - disagree(edges, labels)
}

/// Visits every partition of `0..n` with at most `k` blocks as a restricted-growth string.
pub fn for_each_partition(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 {
        f(&[]);
        return;
    }
    let mut a = vec![0usize; n];
    fn rec(i: usize, used: usize, k: usize, a: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if i == a.len() {
            f(a);
            return;
        }
        for c in 0..=used.min(k - 1) {
            a[i] = c;
            rec(i + 1, used.max(c + 1), k, a, f);
        }
    }
    rec(1, 1, k.max(1), &mut a, &mut f);
}

/// Plain exhaustive minimum disagreement over partitions with at most `k` blocks.
pub fn opt_disagree(n: usize, edges: &[Edge], k: Option<usize>) -> u64 {
    let mut best = u64::MAX;
    for_each_partition(n, k.unwrap_or(n).max(1), |a| best = best.min(disagree(edges, a)));
    best
}

pub fn opt_agree(n: usize, edges: &[Edge], k: Option<usize>) -> u64 {
    total(edges) - opt_disagree(n, edges, k)
}

/// Weight of edges with endpoints on different sides.
pub fn cut(edges: &[Edge], inside: &[bool]) -> u64 {
    edges.iter().filter(|&&(u, v, _)| inside[u] != inside[v]).map(|e| e.2.unsigned_abs()).sum()
}

pub fn multicut_cost(edges: &[Edge], regions: &[usize]) -> u64 {
    edges.iter().filter(|&&(u, v, _)| regions[u] != regions[v]).map(|e| e.2.unsigned_abs()).sum()
}

/// Whether some pair is still connected once every edge between regions is removed.
pub fn connects_a_pair(n: usize, edges: &[Edge], regions: &[usize], pairs: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, _) in edges {
        if regions[u] == regions[v] {
            adj[u].push(v);
            adj[v].push(u);
        }
    }
    pairs.iter().any(|&(s, t)| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([s]);
        seen[s] = true;
        while let Some(x) = queue.pop_front() {
            if x == t {
                return true;
            }
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        false
    })
}

/// Optimal multicut: the cheapest partition separating every pair, since removing a
/// multicut leaves components that form such a partition.
pub fn opt_multicut(n: usize, edges: &[Edge], pairs: &[(usize, usize)]) -> u64 {
    let mut best = u64::MAX;
    for_each_partition(n, n, |a| {
        if pairs.iter().all(|&(s, t)| a[s] != a[t]) {
            best = best.min(multicut_cost(edges, a));
        }
    });
    best
}

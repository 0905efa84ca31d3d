//! Pivot clustering over a random order, emulated in O(log log n) passes.
//!
//! Window `j` covers ranks `(t_{j-1}, t_j]` with `t_j = (2n)^(1 - 2^-j)`. Pass `2j-1` buffers
//! the positive edges among still-uncovered nodes of the window, which is enough to run the
//! pivot steps inside it; pass `2j` finds, for each uncovered node past the window, the
//! first window pivot adjacent to it. The last window reaches `n` and needs no second pass.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::stream::StreamSource;
use crate::graph::{Clustering, GraphSnapshot, NodeId};
use crate::hash::rng_for;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PivotConfig {
    pub seed: u64,
    /// Constant `c` in the edge budget `5 c n ln n`.
    pub budget_constant: f64,
    /// Overrides the edge budget.
    pub budget_edges: Option<usize>,
}

impl PivotConfig {
    pub fn new(seed: u64) -> Self {
        PivotConfig { seed, budget_constant: 2.0, budget_edges: None }
    }

    pub fn budget(&self, n: usize) -> usize {
        self.budget_edges
            .unwrap_or_else(|| (5.0 * self.budget_constant * n as f64 * (n.max(2) as f64).ln()).ceil() as usize)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowReport {
    /// Ranks `(start, end]`, 1-based.
    pub start: usize,
    pub end: usize,
    pub buffered: usize,
    /// `5 ln n end^2 / start`, or `end^2` for the first window.
    pub buffer_bound: f64,
    pub pivots: usize,
    /// Nodes past the window covered by its second pass.
    pub covered_later: usize,
    pub uncovered_after: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct PivotOutcome {
    pub clustering: Clustering,
    pub passes: usize,
    /// `2 (1 + ceil(log2 log2 n))`.
    pub pass_bound: usize,
    pub windows: Vec<WindowReport>,
    pub peak_buffer: usize,
    pub budget: usize,
}

/// Seeded uniform order of the nodes: `order[i]` is the node with rank `i + 1`.
pub fn pivot_permutation(n: usize, seed: u64) -> Vec<NodeId> {
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, "pivot-permutation"));
    order
}

/// In-memory pivot run: each uncovered node in order takes its uncovered positive neighbours.
pub fn pivot_reference(s: &GraphSnapshot, order: &[NodeId]) -> Clustering {
    let n = s.n;
    let mut adj = vec![Vec::new(); n];
    for (u, v, _) in s.positive_edges() {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut label = vec![usize::MAX; n];
    for &v in order {
        if label[v] != usize::MAX {
            continue;
        }
        label[v] = v;
        for &u in &adj[v] {
            if label[u] == usize::MAX {
                label[u] = v;
            }
        }
    }
    Clustering::from_labels(&label)
}

pub fn pass_bound(n: usize) -> usize {
    let ll = if n <= 2 { 0.0 } else { (n as f64).log2().log2().ceil() };
    2 * (1 + ll as usize)
}

/// Window ends `floor(t_j)`, capped at `n` and strictly increasing.
pub fn window_ends(n: usize) -> Vec<usize> {
    let mut ends = Vec::new();
    let mut prev = 0;
    let mut j = 1;
    while prev < n {
        let t = (2.0 * n as f64).powf(1.0 - 0.5f64.powi(j));
        let end = ((t + 1e-9).floor() as usize).clamp(prev + 1, n);
        ends.push(end);
        prev = end;
        j += 1;
    }
    ends
}

/// Net-weight accumulator for the pairs a pass is allowed to look at.
struct NetPairs {
    insert_only: bool,
    net: BTreeMap<(NodeId, NodeId), i64>,
    kept: Vec<(NodeId, NodeId)>,
    peak: usize,
}

impl NetPairs {
    fn new(insert_only: bool) -> Self {
        NetPairs { insert_only, net: BTreeMap::new(), kept: Vec::new(), peak: 0 }
    }

    fn held(&self) -> usize {
        self.net.len() + self.kept.len()
    }

    fn observe(&mut self, key: (NodeId, NodeId), w: i64) {
        if self.insert_only {
            if w > 0 {
                self.kept.push(key);
            }
        } else {
            let e = self.net.entry(key).or_insert(0);
            *e += w;
            if *e == 0 {
                self.net.remove(&key);
            }
        }
        self.peak = self.peak.max(self.held());
    }

    /// Pairs with positive net weight.
    fn finish(self) -> Vec<(NodeId, NodeId)> {
        let mut out = self.kept;
        out.extend(self.net.into_iter().filter(|&(_, w)| w > 0).map(|(k, _)| k));
        out
    }
}

pub fn pivot_loglog(src: &mut StreamSource, cfg: &PivotConfig) -> Result<PivotOutcome> {
    if !src.weight_class().is_unit() {
        return Err(Error::UnsupportedWeightClass("pivot needs unit weights".into()));
    }
    let n = src.n();
    let order = pivot_permutation(n, cfg.seed);
    let mut rank = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i + 1;
    }
    let budget = cfg.budget(n);
    let insert_only = src.is_insert_only();
    let passes_before = src.passes();
    let mut label = vec![usize::MAX; n];
    let mut windows = Vec::new();
    let mut peak_buffer = 0;
    let mut uncovered = n;
    let mut start = 0;
    let ln_n = (n.max(2) as f64).ln();

    let mut counted = 0;
    for end in window_ends(n) {
        if uncovered == 0 {
            break;
        }
        let in_window = |v: NodeId| rank[v] > start && rank[v] <= end;
        let mut buf = NetPairs::new(insert_only);
        counted += 1;
        for e in src.pass() {
            let (u, v) = e.key();
            if u != v && label[u] == usize::MAX && label[v] == usize::MAX && in_window(u) && in_window(v) {
                buf.observe((u, v), e.signed_weight());
                if buf.held() > budget {
                    return Err(Error::Refused(format!(
                        "window ({start}, {end}] buffered {} edges, budget {budget}; windows so far: {windows:?}",
                        buf.held()
                    )));
                }
            }
        }
        peak_buffer = peak_buffer.max(buf.peak);
        let f = buf.finish();
        let buffered = f.len();
        let mut adj: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for &(u, v) in &f {
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        }
        let mut pivots = Vec::new();
        for &v in &order[start..end] {
            if label[v] != usize::MAX {
                continue;
            }
            label[v] = v;
            uncovered -= 1;
            pivots.push(v);
            for &u in adj.get(&v).map_or(&[][..], Vec::as_slice) {
                if label[u] == usize::MAX {
                    label[u] = v;
                    uncovered -= 1;
                }
            }
        }

        let mut covered_later = 0;
        if end < n && uncovered > 0 {
            let mut is_pivot = vec![false; n];
            for &p in &pivots {
                is_pivot[p] = true;
            }
            let mut first: Vec<usize> = vec![usize::MAX; n];
            let mut links = NetPairs::new(insert_only);
            counted += 1;
            for e in src.pass() {
                let (a, b) = e.key();
                for (p, u) in [(a, b), (b, a)] {
                    if is_pivot[p] && label[u] == usize::MAX && rank[u] > end {
                        if insert_only {
                            if e.signed_weight() > 0 {
                                first[u] = first[u].min(rank[p]);
                            }
                        } else {
                            links.observe((p, u), e.signed_weight());
                        }
                    }
                }
            }
            peak_buffer = peak_buffer.max(links.peak);
            for (p, u) in links.finish() {
                first[u] = first[u].min(rank[p]);
            }
            for u in 0..n {
                if first[u] != usize::MAX {
                    label[u] = order[first[u] - 1];
                    uncovered -= 1;
                    covered_later += 1;
                }
            }
        }
        let buffer_bound = if start == 0 { (end * end) as f64 } else { 5.0 * ln_n * (end * end) as f64 / start as f64 };
        windows.push(WindowReport {
            start,
            end,
            buffered,
            buffer_bound,
            pivots: pivots.len(),
            covered_later,
            uncovered_after: uncovered,
        });
        start = end;
    }
    debug_assert!(label.iter().all(|&l| l != usize::MAX));
    let passes = src.passes() - passes_before;
    assert_eq!(passes, counted, "pass accounting drifted");
    Ok(PivotOutcome {
        clustering: Clustering::from_labels(&label),
        passes,
        pass_bound: pass_bound(n),
        windows,
        peak_buffer,
        budget,
    })
}

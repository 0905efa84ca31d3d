//! Shared pieces of the sample-and-assign clustering algorithms: incident-edge storage for
//! a node sample, the argmax assignment rule, and partition enumeration.

use std::collections::{BTreeMap, HashMap};

use crate::graph::{EdgeUpdate, NodeId};

/// Net weights of all stream edges with at least one endpoint in a fixed sample.
#[derive(Clone, Debug)]
pub struct SampleEdges {
    n: usize,
    sample: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    pending: BTreeMap<(NodeId, usize), i64>,
    rows: Vec<Vec<(usize, i64)>>,
}

impl SampleEdges {
    pub fn new(n: usize, sample: Vec<NodeId>) -> Self {
        let index = sample.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        SampleEdges { n, sample, index, pending: BTreeMap::new(), rows: Vec::new() }
    }

    pub fn sample(&self) -> &[NodeId] {
        &self.sample
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.index.contains_key(&v)
    }

    pub fn observe(&mut self, e: &EdgeUpdate) {
        let w = e.signed_weight();
        if let Some(&si) = self.index.get(&e.v) {
            *self.pending.entry((e.u, si)).or_insert(0) += w;
        }
        if let Some(&si) = self.index.get(&e.u) {
            *self.pending.entry((e.v, si)).or_insert(0) += w;
        }
    }

    /// Live `(node, sample member)` entries held so far.
    pub fn stored(&self) -> usize {
        if self.rows.is_empty() {
            self.pending.values().filter(|w| **w != 0).count()
        } else {
            self.rows.iter().map(Vec::len).sum()
        }
    }

    /// Freezes the pass into per-node rows `(sample index, weight)`.
    pub fn finish(&mut self) {
        let mut rows = vec![Vec::new(); self.n];
        for (&(v, si), &w) in &self.pending {
            if w != 0 {
                rows[v].push((si, w));
            }
        }
        self.rows = rows;
        self.pending.clear();
    }

    pub fn row(&self, v: NodeId) -> &[(usize, i64)] {
        &self.rows[v]
    }

    /// Argmax over clusters `j < k` of positive weight into sample members labelled `j`
    /// plus negative weight to sample members not labelled `j`. Ties go to the lowest j.
    pub fn assign(&self, v: NodeId, sample_labels: &[usize], k: usize, scratch: &mut Vec<i64>) -> usize {
        scratch.clear();
        scratch.resize(k, 0);
        // the negative weight to the whole sample is common to every j and drops out
        for &(si, w) in &self.rows[v] {
            scratch[sample_labels[si]] += w;
        }
        let mut best = 0;
        for j in 1..k {
            if scratch[j] > scratch[best] {
                best = j;
            }
        }
        best
    }

    /// Full labelling of `0..n`: sample members keep their labels, everyone else is
    /// assigned by [`assign`](Self::assign). Nodes for which `active` is false keep label
    /// `usize::MAX`.
    pub fn extend(&self, sample_labels: &[usize], k: usize, active: impl Fn(NodeId) -> bool) -> Vec<usize> {
        let mut scratch = Vec::with_capacity(k);
        (0..self.n)
            .map(|v| {
                if !active(v) {
                    usize::MAX
                } else if let Some(&si) = self.index.get(&v) {
                    sample_labels[si]
                } else {
                    self.assign(v, sample_labels, k, &mut scratch)
                }
            })
            .collect()
    }
}

/// Number of restricted-growth strings of length `r` with at most `k` blocks.
pub fn count_partitions(r: usize, k: usize) -> f64 {
    // Stirling numbers of the second kind, summed over block counts up to k.
    let mut s = vec![vec![0.0f64; k + 1]; r + 1];
    s[0][0] = 1.0;
    for i in 1..=r {
        for j in 1..=k.min(i) {
            s[i][j] = j as f64 * s[i - 1][j] + s[i - 1][j - 1];
        }
    }
    (0..=k).map(|j| s[r][j]).sum()
}

/// Calls `f` on every restricted-growth string of length `r` using at most `k` labels, in
/// lexicographic order.
pub fn for_each_partition(r: usize, k: usize, mut f: impl FnMut(&[usize])) {
    fn rec(labels: &mut Vec<usize>, r: usize, k: usize, used: usize, f: &mut dyn FnMut(&[usize])) {
        if labels.len() == r {
            f(labels);
            return;
        }
        let top = if labels.is_empty() { 1 } else { (used + 1).min(k) };
        for c in 0..top {
            labels.push(c);
            rec(labels, r, k, used.max(c + 1), f);
            labels.pop();
        }
    }
    if k == 0 {
        return;
    }
    rec(&mut Vec::with_capacity(r), r, k, 0, &mut f);
}

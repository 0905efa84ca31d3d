//! Dynamic signed-graph streams, materialized snapshots and clusterings.

pub mod brute;
pub mod eval;
pub mod gen;
pub mod stream;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Insert,
    Delete,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeUpdate {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: i64,
    pub op: Op,
}

impl EdgeUpdate {
    pub fn insert(u: NodeId, v: NodeId, weight: i64) -> Self {
        EdgeUpdate { u, v, weight, op: Op::Insert }
    }

    pub fn delete(u: NodeId, v: NodeId, weight: i64) -> Self {
        EdgeUpdate { u, v, weight, op: Op::Delete }
    }

    /// Endpoints ordered so that the first is the smaller id.
    #[inline]
    pub fn key(&self) -> (NodeId, NodeId) {
        ordered(self.u, self.v)
    }

    /// Weight contribution to the net-weight vector: `+w` for inserts, `-w` for deletes.
    #[inline]
    pub fn signed_weight(&self) -> i64 {
        match self.op {
            Op::Insert => self.weight,
            Op::Delete => -self.weight,
        }
    }

    pub fn inverse(&self) -> Self {
        let op = match self.op {
            Op::Insert => Op::Delete,
            Op::Delete => Op::Insert,
        };
        EdgeUpdate { op, ..*self }
    }
}

#[inline]
pub fn ordered(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "lowercase")]
pub enum WeightClass {
    Unit,
    Bounded { w_star: u64 },
    Arbitrary { w_star: u64 },
}

impl WeightClass {
    pub fn w_star(&self) -> u64 {
        match *self {
            WeightClass::Unit => 1,
            WeightClass::Bounded { w_star } | WeightClass::Arbitrary { w_star } => w_star,
        }
    }

    pub fn admits(&self, w: i64) -> bool {
        w != 0 && w.unsigned_abs() <= self.w_star()
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, WeightClass::Unit)
    }
}

impl fmt::Display for WeightClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightClass::Unit => write!(f, "unit"),
            WeightClass::Bounded { w_star } => write!(f, "bounded {w_star}"),
            WeightClass::Arbitrary { w_star } => write!(f, "arbitrary {w_star}"),
        }
    }
}

/// Net-weight state of a dynamic stream. Only pairs with nonzero net weight are stored,
/// keyed by `(min, max)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub n: usize,
    pub weight_class: WeightClass,
    edges: BTreeMap<(NodeId, NodeId), i64>,
}

impl GraphSnapshot {
    pub fn empty(n: usize, weight_class: WeightClass) -> Self {
        GraphSnapshot { n, weight_class, edges: BTreeMap::new() }
    }

    /// Builds a snapshot from a static edge list. Each pair may appear once.
    pub fn from_edges<I>(n: usize, weight_class: WeightClass, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId, i64)>,
    {
        let mut s = Self::empty(n, weight_class);
        for (u, v, w) in edges {
            s.apply_update(&EdgeUpdate::insert(u, v, w))?;
        }
        Ok(s)
    }

    /// Folds the updates by summing signed weights per pair. The result does not depend on
    /// the order of the updates.
    pub fn from_updates<'a, I>(n: usize, weight_class: WeightClass, updates: I) -> Self
    where
        I: IntoIterator<Item = &'a EdgeUpdate>,
    {
        let mut edges: BTreeMap<(NodeId, NodeId), i64> = BTreeMap::new();
        for e in updates {
            *edges.entry(e.key()).or_insert(0) += e.signed_weight();
        }
        edges.retain(|_, w| *w != 0);
        GraphSnapshot { n, weight_class, edges }
    }

    /// Checks the update against the current state and applies it.
    pub fn apply_update(&mut self, e: &EdgeUpdate) -> Result<()> {
        validate_update(self.n, self.weight_class, e)?;
        let key = e.key();
        match e.op {
            Op::Insert => {
                if let Some(w) = self.edges.get(&key) {
                    return Err(Error::MalformedStream(format!(
                        "insert of ({}, {}) while an edge of weight {w} is live",
                        key.0, key.1
                    )));
                }
                self.edges.insert(key, e.weight);
            }
            Op::Delete => match self.edges.get(&key) {
                Some(&w) if w == e.weight => {
                    self.edges.remove(&key);
                }
                Some(&w) => {
                    return Err(Error::MalformedStream(format!(
                        "delete of ({}, {}) with weight {} but live weight is {w}",
                        key.0, key.1, e.weight
                    )))
                }
                None => {
                    return Err(Error::MalformedStream(format!(
                        "delete of absent pair ({}, {})",
                        key.0, key.1
                    )))
                }
            },
        }
        Ok(())
    }

    pub fn weight(&self, u: NodeId, v: NodeId) -> i64 {
        self.edges.get(&ordered(u, v)).copied().unwrap_or(0)
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Edges as `(u, v, w)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId, i64)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn positive_edges(&self) -> impl Iterator<Item = (NodeId, NodeId, i64)> + '_ {
        self.edges().filter(|e| e.2 > 0)
    }

    pub fn negative_edges(&self) -> impl Iterator<Item = (NodeId, NodeId, i64)> + '_ {
        self.edges().filter(|e| e.2 < 0)
    }

    pub fn total_abs_weight(&self) -> u64 {
        self.edges.values().map(|w| w.unsigned_abs()).sum()
    }

    pub fn positive_weight(&self) -> u64 {
        self.edges.values().filter(|w| **w > 0).map(|w| w.unsigned_abs()).sum()
    }

    pub fn negative_weight(&self) -> u64 {
        self.edges.values().filter(|w| **w < 0).map(|w| w.unsigned_abs()).sum()
    }

    /// Symmetric adjacency lists `(neighbor, weight)`.
    pub fn adjacency(&self) -> Vec<Vec<(NodeId, i64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (u, v, w) in self.edges() {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        adj
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[NodeId]) -> Self {
        let edges = self
            .edges()
            .map(|(u, v, w)| (ordered(perm[u], perm[v]), w))
            .collect();
        GraphSnapshot { n: self.n, weight_class: self.weight_class, edges }
    }
}

pub(crate) fn validate_update(n: usize, wc: WeightClass, e: &EdgeUpdate) -> Result<()> {
    if e.u == e.v {
        return Err(Error::MalformedStream(format!("self-loop on node {}", e.u)));
    }
    if e.u >= n || e.v >= n {
        return Err(Error::MalformedStream(format!(
            "node id out of range in ({}, {}) for n = {n}",
            e.u, e.v
        )));
    }
    if e.weight == 0 {
        return Err(Error::MalformedStream(format!("zero weight on ({}, {})", e.u, e.v)));
    }
    if !wc.admits(e.weight) {
        return Err(Error::MalformedStream(format!(
            "weight {} on ({}, {}) outside class {wc}",
            e.weight, e.u, e.v
        )));
    }
    Ok(())
}

/// A partition of `0..n`. Labels are canonical: cluster ids are assigned in order of first
/// appearance, so two equal partitions always compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clustering {
    labels: Vec<usize>,
    k: usize,
}

impl Clustering {
    /// Canonicalizes an arbitrary labelling.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let next = map.len();
            labels.push(*map.entry(r).or_insert(next));
        }
        Clustering { k: map.len(), labels }
    }

    pub fn from_clusters(n: usize, clusters: &[Vec<NodeId>]) -> Result<Self> {
        let mut raw = vec![usize::MAX; n];
        for (c, members) in clusters.iter().enumerate() {
            for &v in members {
                if v >= n || raw[v] != usize::MAX {
                    return Err(Error::InvalidInput(format!(
                        "node {v} out of range or in two clusters"
                    )));
                }
                raw[v] = c;
            }
        }
        if raw.contains(&usize::MAX) {
            return Err(Error::InvalidInput("clusters do not cover every node".into()));
        }
        Ok(Self::from_labels(&raw))
    }

    pub fn singletons(n: usize) -> Self {
        Clustering { labels: (0..n).collect(), k: n }
    }

    pub fn one_cluster(n: usize) -> Self {
        Clustering { labels: vec![0; n], k: usize::from(n > 0) }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn label(&self, v: NodeId) -> usize {
        self.labels[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn same(&self, u: NodeId, v: NodeId) -> bool {
        self.labels[u] == self.labels[v]
    }

    pub fn clusters(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.k];
        for (v, &c) in self.labels.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.k];
        for &c in &self.labels {
            out[c] += 1;
        }
        out
    }
}

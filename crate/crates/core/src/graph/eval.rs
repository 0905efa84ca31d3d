//! Exact objective evaluation.

use super::{Clustering, GraphSnapshot, NodeId};

/// Total |w| of edges consistent with `c`: positive edges inside a cluster plus negative
/// edges across clusters.
pub fn exact_agree(s: &GraphSnapshot, c: &Clustering) -> u64 {
    s.edges()
        .filter(|&(u, v, w)| (w > 0) == c.same(u, v))
        .map(|(_, _, w)| w.unsigned_abs())
        .sum()
}

pub fn exact_disagree(s: &GraphSnapshot, c: &Clustering) -> u64 {
    s.total_abs_weight() - exact_agree(s, c)
}

/// Agreement over an arbitrary real-weighted edge list.
pub fn agree_of<I>(edges: I, c: &Clustering) -> f64
where
    I: IntoIterator<Item = (NodeId, NodeId, f64)>,
{
    edges
        .into_iter()
        .filter(|&(u, v, w)| (w > 0.0) == c.same(u, v))
        .map(|(_, _, w)| w.abs())
        .sum()
}

pub fn disagree_of<I>(edges: I, c: &Clustering) -> f64
where
    I: IntoIterator<Item = (NodeId, NodeId, f64)>,
{
    edges
        .into_iter()
        .filter(|&(u, v, w)| (w > 0.0) != c.same(u, v))
        .map(|(_, _, w)| w.abs())
        .sum()
}

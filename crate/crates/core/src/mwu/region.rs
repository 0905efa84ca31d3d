//! Region growing over LP edge lengths.
//!
//! A ball around `zeta` grows until `cut(B) <= C vol(B)` with `C = 3 ln(kappa + 1)` and
//! `vol(B(zeta, r)) = Z/kappa + sum_inside x w + sum_boundary (r - d(zeta, v)) w`.
//! Between two consecutive node distances the membership and cut are fixed while vol grows
//! linearly, so the first radius meeting the condition is found in closed form.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::graph::NodeId;

/// Edge with weight `w` and LP length `x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: f64,
    pub x: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Ball {
    pub center: NodeId,
    pub radius: f64,
    pub members: Vec<NodeId>,
    pub cut: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BallDecomposition {
    pub balls: Vec<Ball>,
    pub total_cut: f64,
    /// `Z = sum x w` over the input edges.
    pub z: f64,
    pub c: f64,
    /// Ball index of each node, if any.
    pub owner: Vec<Option<usize>>,
}

#[derive(Clone, Copy, PartialEq)]
struct Dist(f64, NodeId);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

pub(crate) fn adjacency(n: usize, edges: &[LengthEdge]) -> Vec<Vec<(NodeId, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for (i, e) in edges.iter().enumerate() {
        adj[e.u].push((e.v, i));
        adj[e.v].push((e.u, i));
    }
    adj
}

/// Dijkstra from `src` over nodes accepted by `allowed`, lengths clamped at zero, ties by
/// node id. Returns distances and the edge used to reach each node.
pub(crate) fn shortest_paths(
    adj: &[Vec<(NodeId, usize)>],
    edges: &[LengthEdge],
    src: NodeId,
    allowed: impl Fn(NodeId) -> bool,
) -> (Vec<f64>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut via = vec![None; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Reverse(Dist(0.0, src)));
    while let Some(Reverse(Dist(d, v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &(to, ei) in &adj[v] {
            if done[to] || !allowed(to) {
                continue;
            }
            let nd = d + edges[ei].x.max(0.0);
            if nd < dist[to] {
                dist[to] = nd;
                via[to] = Some(ei);
                heap.push(Reverse(Dist(nd, to)));
            }
        }
    }
    (dist, via)
}

/// Grows balls from each terminal not yet covered, in the given order, each on the graph
/// left after removing the earlier balls.
pub fn region_grow(n: usize, edges: &[LengthEdge], terminals: &[NodeId], kappa: usize) -> BallDecomposition {
    assert!(kappa >= 1, "region growing needs kappa >= 1");
    let c = 3.0 * ((kappa + 1) as f64).ln();
    let z: f64 = edges.iter().map(|e| e.x.max(0.0) * e.w).sum();
    let seed = z / kappa as f64;
    let adj = adjacency(n, edges);
    let mut owner: Vec<Option<usize>> = vec![None; n];
    let mut balls = Vec::new();
    let mut total_cut = 0.0;
    for &zeta in terminals {
        if owner[zeta].is_some() {
            continue;
        }
        let (dist, _) = shortest_paths(&adj, edges, zeta, |v| owner[v].is_none());
        let mut levels: Vec<f64> = dist.iter().copied().filter(|d| d.is_finite()).collect();
        levels.sort_unstable_by(f64::total_cmp);
        levels.dedup();
        let mut chosen = None;
        for (k, &lk) in levels.iter().enumerate() {
            let (mut cut, mut vol) = (0.0, seed);
            for e in edges {
                if owner[e.u].is_some() || owner[e.v].is_some() {
                    continue;
                }
                let (du, dv) = (dist[e.u], dist[e.v]);
                match (du <= lk, dv <= lk) {
                    (true, true) => vol += e.x.max(0.0) * e.w,
                    (true, false) => {
                        cut += e.w;
                        vol += (lk - du) * e.w;
                    }
                    (false, true) => {
                        cut += e.w;
                        vol += (lk - dv) * e.w;
                    }
                    (false, false) => {}
                }
            }
            let r = if cut <= c * vol { lk } else { lk + 1.0 / c - vol / cut };
            let next = levels.get(k + 1).copied().unwrap_or(f64::INFINITY);
            if r < next {
                chosen = Some((r, cut));
                break;
            }
        }
        let (radius, cut) = chosen.expect("the last level always stops the ball");
        assert!(radius < 1.0 / 3.0 + 1e-9, "ball around {zeta} grew to radius {radius}");
        let id = balls.len();
        let members: Vec<NodeId> = (0..n).filter(|&v| owner[v].is_none() && dist[v] <= radius).collect();
        for &v in &members {
            owner[v] = Some(id);
        }
        total_cut += cut;
        balls.push(Ball { center: zeta, radius, members, cut });
    }
    BallDecomposition { balls, total_cut, z, c, owner }
}

/// Shortest path between two members of one ball, using only that ball's nodes.
/// Returns edge indices and the path length.
pub fn path_in_ball(
    n: usize,
    edges: &[LengthEdge],
    decomp: &BallDecomposition,
    s: NodeId,
    t: NodeId,
) -> Option<(Vec<usize>, f64)> {
    let ball = decomp.owner[s]?;
    if decomp.owner[t] != Some(ball) {
        return None;
    }
    let adj = adjacency(n, edges);
    let (dist, via) = shortest_paths(&adj, edges, s, |v| decomp.owner[v] == Some(ball));
    if !dist[t].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut cur = t;
    while cur != s {
        let ei = via[cur].expect("reached nodes have a predecessor edge");
        path.push(ei);
        let e = edges[ei];
        cur = if e.u == cur { e.v } else { e.u };
    }
    path.reverse();
    Some((path, dist[t]))
}

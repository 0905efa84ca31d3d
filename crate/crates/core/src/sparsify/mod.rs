//! Cut sparsification of the positive and negative sides of a signed graph.
//!
//! Each edge is kept with probability `p_e = min(1, rho w_e / q_e)` and reweighted by
//! `1/p_e`, where `q_e` is the Nagamochi-Ibaraki index of `e` from a maximum-adjacency
//! ordering. The index never exceeds the local edge connectivity of the endpoints, so it
//! is a conservative stand-in for edge strength: light, well-connected edges are sampled
//! and bridges are always kept. `rho = c eps^-2 ln n`.
//!
//! Insert-only streams are sparsified with merge-and-reduce over chunks, splitting the
//! accuracy budget across levels. Streams with deletions are folded to a snapshot first.

pub mod gg_agree;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::eval::{agree_of, disagree_of};
use crate::graph::stream::{write_updates, StreamSource};
use crate::graph::{Clustering, EdgeUpdate, NodeId, WeightClass};
use crate::hash::sub_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
    Combined,
}

impl Side {
    fn tag(self) -> &'static str {
        match self {
            Side::Plus => "H+",
            Side::Minus => "H-",
            Side::Combined => "H",
        }
    }
}

/// Reweighted edge list. Weights on `Plus`/`Minus` sides are positive magnitudes; on the
/// `Combined` side they carry the sign of the source edge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SparseGraph {
    pub n: usize,
    pub eps: f64,
    pub side: Side,
    pub edges: Vec<(NodeId, NodeId, f64)>,
}

impl SparseGraph {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.2.abs()).sum()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Weight of edges with exactly one endpoint in `inside`.
    pub fn cut_weight(&self, inside: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v, _)| inside[u] != inside[v])
            .map(|e| e.2.abs())
            .sum()
    }

    /// Signed union of a positive and a negative side.
    pub fn combine(plus: &SparseGraph, minus: &SparseGraph) -> SparseGraph {
        let mut edges = plus.edges.clone();
        edges.extend(minus.edges.iter().map(|&(u, v, w)| (u, v, -w)));
        SparseGraph { n: plus.n, eps: plus.eps.max(minus.eps), side: Side::Combined, edges }
    }

    /// Writes the stream text format. Weights are multiplied by `scale` and rounded;
    /// `scale` is 1 when every weight is integral and is recorded in the header comment.
    pub fn write_text<W: Write>(&self, out: W) -> Result<()> {
        let integral = self.edges.iter().all(|e| e.2.fract() == 0.0);
        let scale = if integral { 1.0 } else { 1000.0 };
        let sign = if self.side == Side::Minus { -1.0 } else { 1.0 };
        let ups: Vec<EdgeUpdate> = self
            .edges
            .iter()
            .map(|&(u, v, w)| {
                let x = sign * w * scale;
                // never round a live edge down to zero
                let mag = (x.abs().round() as i64).max(1);
                EdgeUpdate::insert(u, v, if x < 0.0 { -mag } else { mag })
            })
            .collect();
        let w_star = ups.iter().map(|e| e.weight.unsigned_abs()).max().unwrap_or(1);
        let comments = vec![format!("sparsifier eps={} side={} scale={scale}", self.eps, self.side.tag())];
        write_updates(self.n, WeightClass::Arbitrary { w_star }, &comments, ups, out)
    }
}

/// Agreement of `c` evaluated exactly on a combined sparsifier.
pub fn estimate_agree(h: &SparseGraph, c: &Clustering) -> f64 {
    agree_of(h.edges.iter().copied(), c)
}

pub fn estimate_disagree(h: &SparseGraph, c: &Clustering) -> f64 {
    disagree_of(h.edges.iter().copied(), c)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SparsifyConfig {
    /// Overall accuracy; each side preserves cuts within `1 +- eps/6`.
    pub eps: f64,
    pub seed: u64,
    /// Oversampling constant `c` in `rho = c eps^-2 ln n`.
    pub oversample: f64,
    /// Edges buffered before a merge-and-reduce step; defaults to `4 n`.
    pub chunk: Option<usize>,
}

impl SparsifyConfig {
    pub fn new(eps: f64, seed: u64) -> Self {
        SparsifyConfig { eps, seed, oversample: 8.0, chunk: None }
    }

    pub fn side_eps(&self) -> f64 {
        self.eps / 6.0
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sparsifier {
    pub plus: SparseGraph,
    pub minus: SparseGraph,
    /// Deletions forced snapshot-then-sparsify instead of merge-and-reduce.
    pub dynamic_fallback: bool,
    pub peak_stored_edges: usize,
}

impl Sparsifier {
    pub fn combined(&self) -> SparseGraph {
        SparseGraph::combine(&self.plus, &self.minus)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64, NodeId);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    // larger attachment first, then smaller node id
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

/// Nagamochi-Ibaraki indices from a maximum-adjacency ordering: when `v` is scanned, its
/// edges to already-scanned vertices are taken in scan order and each gets the running
/// attachment weight of `v` just after it is counted.
pub fn ni_indices(n: usize, edges: &[(NodeId, NodeId, f64)]) -> Vec<f64> {
    let mut adj: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); n];
    for (i, &(u, v, _)) in edges.iter().enumerate() {
        adj[u].push((v, i));
        adj[v].push((u, i));
    }
    let mut scanned_at = vec![usize::MAX; n];
    let mut attach = vec![0.0f64; n];
    let mut q = vec![0.0f64; edges.len()];
    let mut heap = BinaryHeap::new();
    let mut step = 0;
    for start in 0..n {
        if scanned_at[start] != usize::MAX {
            continue;
        }
        heap.push(Key(0.0, start));
        while let Some(Key(r, v)) = heap.pop() {
            if scanned_at[v] != usize::MAX || r != attach[v] {
                continue;
            }
            scanned_at[v] = step;
            step += 1;
            let mut back: Vec<(usize, usize)> = adj[v]
                .iter()
                .filter(|&&(u, _)| scanned_at[u] < scanned_at[v])
                .map(|&(u, i)| (scanned_at[u], i))
                .collect();
            back.sort_unstable();
            let mut run = 0.0;
            for (_, i) in back {
                run += edges[i].2;
                q[i] = run;
            }
            for &(u, i) in &adj[v] {
                if scanned_at[u] == usize::MAX {
                    attach[u] += edges[i].2;
                    heap.push(Key(attach[u], u));
                }
            }
        }
    }
    q
}

/// Deterministic uniform in [0, 1) for an edge, independent of processing order.
fn edge_uniform(seed: u64, u: NodeId, v: NodeId, level: usize) -> f64 {
    let mut x = seed ^ ((u as u64) << 32 | v as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (level as u64).rotate_left(17);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^= x >> 31;
    (x >> 11) as f64 / (1u64 << 53) as f64
}

pub fn sampling_rate(n: usize, eps_side: f64, oversample: f64) -> f64 {
    oversample * (n.max(2) as f64).ln() / (eps_side * eps_side)
}

/// Edge count at or below which a graph is returned unchanged.
pub fn target_edges(n: usize, eps_side: f64, oversample: f64) -> f64 {
    sampling_rate(n, eps_side, oversample) * n.saturating_sub(1) as f64
}

/// Static sparsification of one side. Weights must be positive.
pub fn sparsify_edges(
    n: usize,
    edges: &[(NodeId, NodeId, f64)],
    eps_side: f64,
    oversample: f64,
    seed: u64,
    level: usize,
) -> Vec<(NodeId, NodeId, f64)> {
    if edges.len() as f64 <= target_edges(n, eps_side, oversample) {
        return edges.to_vec();
    }
    let rho = sampling_rate(n, eps_side, oversample);
    let q = ni_indices(n, edges);
    edges
        .iter()
        .zip(q)
        .filter_map(|(&(u, v, w), qe)| {
            let p = (rho * w / qe).min(1.0);
            (edge_uniform(seed, u, v, level) < p).then_some((u, v, w / p))
        })
        .collect()
}

struct MergeReduce {
    n: usize,
    eps_level: f64,
    oversample: f64,
    seed: u64,
    chunk: usize,
    buffer: Vec<(NodeId, NodeId, f64)>,
    levels: Vec<Option<Vec<(NodeId, NodeId, f64)>>>,
    peak: usize,
}

impl MergeReduce {
    fn stored(&self) -> usize {
        self.buffer.len() + self.levels.iter().flatten().map(Vec::len).sum::<usize>()
    }

    fn push(&mut self, e: (NodeId, NodeId, f64)) {
        self.buffer.push(e);
        self.peak = self.peak.max(self.stored());
        if self.buffer.len() >= self.chunk {
            let chunk = std::mem::take(&mut self.buffer);
            self.carry(chunk, 0);
        }
    }

    fn carry(&mut self, mut summary: Vec<(NodeId, NodeId, f64)>, mut level: usize) {
        summary = sparsify_edges(self.n, &summary, self.eps_level, self.oversample, self.seed, level);
        loop {
            if self.levels.len() <= level {
                self.levels.resize(level + 1, None);
            }
            match self.levels[level].take() {
                None => {
                    self.levels[level] = Some(summary);
                    break;
                }
                Some(mut other) => {
                    other.extend(summary);
                    self.peak = self.peak.max(self.stored() + other.len());
                    level += 1;
                    summary = sparsify_edges(self.n, &other, self.eps_level, self.oversample, self.seed, level);
                }
            }
        }
        self.peak = self.peak.max(self.stored());
    }

    fn finish(mut self) -> (Vec<(NodeId, NodeId, f64)>, usize) {
        let mut all = std::mem::take(&mut self.buffer);
        for l in self.levels.drain(..).flatten() {
            all.extend(l);
        }
        all.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        (all, self.peak)
    }
}

/// Incremental construction over one pass, so other per-pass state can share the pass.
pub struct SparsifierBuilder {
    n: usize,
    cfg: SparsifyConfig,
    plus: MergeReduce,
    minus: MergeReduce,
    // net weights when the stream has deletions
    net: Option<BTreeMap<(NodeId, NodeId), i64>>,
    peak: usize,
}

impl SparsifierBuilder {
    pub fn new(n: usize, cfg: &SparsifyConfig, insert_only: bool) -> Result<Self> {
        if !(cfg.eps > 0.0 && cfg.eps <= 1.0) {
            return Err(Error::InvalidInput(format!("sparsifier needs 0 < eps <= 1, got {}", cfg.eps)));
        }
        let chunk = cfg.chunk.unwrap_or(4 * n).max(1);
        let max_edges = (n * n.saturating_sub(1) / 2).max(1);
        let levels = ((max_edges as f64 / chunk as f64).log2().ceil().max(0.0) as usize) + 1;
        // (1 + x/(2L))^L <= e^(x/2) <= 1 + x for x <= 1
        let eps_level = cfg.side_eps() / (2.0 * levels as f64);
        let mk = |label| MergeReduce {
            n,
            eps_level,
            oversample: cfg.oversample,
            seed: sub_seed(cfg.seed, label),
            chunk,
            buffer: Vec::new(),
            levels: Vec::new(),
            peak: 0,
        };
        if !insert_only {
            log::warn!("stream has deletions; sparsifying a folded snapshot instead of merge-and-reduce");
        }
        Ok(SparsifierBuilder {
            n,
            cfg: *cfg,
            plus: mk("sparsify-plus"),
            minus: mk("sparsify-minus"),
            net: (!insert_only).then(BTreeMap::new),
            peak: 0,
        })
    }

    pub fn push(&mut self, e: &EdgeUpdate) {
        let (u, v) = e.key();
        if let Some(net) = &mut self.net {
            *net.entry((u, v)).or_insert(0) += e.signed_weight();
            if net[&(u, v)] == 0 {
                net.remove(&(u, v));
            }
            self.peak = self.peak.max(net.len());
            return;
        }
        if e.weight > 0 {
            self.plus.push((u, v, e.weight as f64));
        } else {
            self.minus.push((u, v, (-e.weight) as f64));
        }
        let now = self.plus.stored() + self.minus.stored();
        self.peak = self.peak.max(now).max(self.plus.peak + self.minus.stored()).max(self.plus.stored() + self.minus.peak);
    }

    pub fn finish(self) -> Sparsifier {
        let (n, eps_side) = (self.n, self.cfg.side_eps());
        if let Some(net) = self.net {
            let plus: Vec<_> = net.iter().filter(|e| *e.1 > 0).map(|(&(u, v), &w)| (u, v, w as f64)).collect();
            let minus: Vec<_> = net.iter().filter(|e| *e.1 < 0).map(|(&(u, v), &w)| (u, v, -w as f64)).collect();
            let mk = |edges: &[(NodeId, NodeId, f64)], side, label| SparseGraph {
                n,
                eps: eps_side,
                side,
                edges: sparsify_edges(n, edges, eps_side, self.cfg.oversample, sub_seed(self.cfg.seed, label), 0),
            };
            return Sparsifier {
                plus: mk(&plus, Side::Plus, "sparsify-plus"),
                minus: mk(&minus, Side::Minus, "sparsify-minus"),
                dynamic_fallback: true,
                peak_stored_edges: self.peak,
            };
        }
        let (pe, _) = self.plus.finish();
        let (me, _) = self.minus.finish();
        Sparsifier {
            plus: SparseGraph { n, eps: eps_side, side: Side::Plus, edges: pe },
            minus: SparseGraph { n, eps: eps_side, side: Side::Minus, edges: me },
            dynamic_fallback: false,
            peak_stored_edges: self.peak,
        }
    }
}

/// One pass over the stream producing sparsifiers of both sides.
pub fn build(src: &mut StreamSource, cfg: &SparsifyConfig) -> Result<Sparsifier> {
    let mut b = SparsifierBuilder::new(src.n(), cfg, src.is_insert_only())?;
    for e in src.pass() {
        b.push(&e);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen::{gen_instance, with_churn, InstanceKind};
    use crate::graph::GraphSnapshot;
    use crate::union_find::UnionFind;

    /// Minimum s-t cut by brute force over all vertex subsets, n <= 10.
    fn min_st_cut(n: usize, edges: &[(NodeId, NodeId, f64)], s: NodeId, t: NodeId) -> f64 {
        let g = SparseGraph { n, eps: 0.0, side: Side::Plus, edges: edges.to_vec() };
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let inside: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            if inside[s] && !inside[t] {
                best = best.min(g.cut_weight(&inside));
            }
        }
        best
    }

    #[test]
    fn ni_index_bounded_by_local_connectivity() {
        for seed in 0..20 {
            let inst = gen_instance(&InstanceKind::RandomSigned { density: 0.5, w_star: 4 }, 9, seed).unwrap();
            let s = inst.source.oracle_snapshot();
            let edges: Vec<_> = s.edges().map(|(u, v, w)| (u, v, w.unsigned_abs() as f64)).collect();
            let q = ni_indices(9, &edges);
            for (i, &(u, v, w)) in edges.iter().enumerate() {
                assert!(q[i] >= w - 1e-9);
                assert!(q[i] <= min_st_cut(9, &edges, u, v) + 1e-9, "edge {u}-{v}");
            }
        }
    }

    #[test]
    fn small_graphs_are_returned_unchanged() {
        let inst = gen_instance(&InstanceKind::RandomSigned { density: 0.7, w_star: 5 }, 12, 2).unwrap();
        let mut src = inst.source;
        let s = src.oracle_snapshot();
        let sp = build(&mut src, &SparsifyConfig::new(0.5, 1)).unwrap();
        assert_eq!(sp.plus.len() + sp.minus.len(), s.num_edges());
        let h = sp.combined();
        let c = Clustering::from_labels(&(0..12).map(|i| i % 3).collect::<Vec<_>>());
        assert_eq!(estimate_agree(&h, &c), crate::graph::eval::exact_agree(&s, &c) as f64);
        assert_eq!(src.passes(), 1);
    }

    #[test]
    fn zero_cuts_stay_zero() {
        // two components sampled aggressively: no edge can appear across them
        let mut edges = Vec::new();
        for base in [0, 30] {
            for i in 0..30 {
                for j in i + 1..30 {
                    edges.push((base + i, base + j, 1.0));
                }
            }
        }
        let out = sparsify_edges(60, &edges, 0.9, 0.05, 3, 0);
        assert!(out.len() < edges.len());
        let mut uf = UnionFind::new(60);
        for &(u, v, _) in &out {
            assert_eq!(u < 30, v < 30);
            uf.union(u, v);
        }
    }

    #[test]
    fn sampling_path_preserves_cuts_loosely() {
        // far below the asymptotic constants, so only a loose band is expected
        let n = 120;
        let inst = gen_instance(&InstanceKind::RandomSigned { density: 0.8, w_star: 3 }, n, 4).unwrap();
        let s: GraphSnapshot = inst.source.oracle_snapshot();
        let edges: Vec<_> = s.edges().map(|(u, v, w)| (u, v, w.unsigned_abs() as f64)).collect();
        let out = sparsify_edges(n, &edges, 0.5, 0.3, 11, 0);
        assert!(out.len() < edges.len() * 3 / 4, "{} of {}", out.len(), edges.len());
        let g = SparseGraph { n, eps: 0.5, side: Side::Plus, edges: edges.clone() };
        let h = SparseGraph { n, eps: 0.5, side: Side::Plus, edges: out };
        let mut rng = crate::hash::rng_for(1, "cuts");
        for _ in 0..300 {
            let inside: Vec<bool> = (0..n).map(|_| rand::Rng::random_bool(&mut rng, 0.5)).collect();
            let (a, b) = (g.cut_weight(&inside), h.cut_weight(&inside));
            assert!((a - b).abs() <= 0.5 * a, "{a} vs {b}");
        }
    }

    #[test]
    fn merge_reduce_matches_snapshot_when_nothing_is_sampled() {
        let inst = gen_instance(&InstanceKind::RandomSigned { density: 0.4, w_star: 2 }, 30, 6).unwrap();
        let mut src = inst.source.clone();
        let mut cfg = SparsifyConfig::new(0.5, 2);
        cfg.chunk = Some(7);
        let a = build(&mut src, &cfg).unwrap();
        let dynamic = with_churn(&inst.source, 10, 1).unwrap();
        let mut dsrc = dynamic;
        let b = build(&mut dsrc, &cfg).unwrap();
        assert!(!a.dynamic_fallback && b.dynamic_fallback);
        assert_eq!(a.plus.edges, b.plus.edges);
        assert_eq!(a.minus.edges, b.minus.edges);
    }

    #[test]
    fn text_output_reads_back() {
        let inst = gen_instance(&InstanceKind::RandomSigned { density: 0.5, w_star: 2 }, 8, 1).unwrap();
        let mut src = inst.source;
        let sp = build(&mut src, &SparsifyConfig::new(0.5, 2)).unwrap();
        let h = sp.combined();
        let mut buf = Vec::new();
        h.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# sparsifier eps="));
        let back = crate::graph::stream::read_stream(&buf[..]).unwrap().oracle_snapshot();
        assert_eq!(back.edges().map(|(u, v, w)| (u, v, w)).collect::<Vec<_>>(), src.oracle_snapshot().edges().collect::<Vec<_>>());
    }
}

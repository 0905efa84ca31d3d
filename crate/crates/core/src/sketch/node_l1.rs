//! Node-based L1 sketch answering disagreement queries for clusterings with at most two
//! clusters, for arbitrary weights.
//!
//! Node `i` implicitly owns a vector `a^i` indexed by node pairs. A negative edge `ij`
//! puts `w/2` on coordinate `ij` of both endpoints; a positive edge puts `+w/2` on the
//! smaller endpoint and `-w/2` on the larger. For a two-partition `{C1, C2}` the vector
//! `sum_{C1} a - sum_{C2} a` has L1 norm equal to the disagreement. Each `a^i` is
//! multiplied by a shared Cauchy projection, and the L1 norm is read off as the median of
//! absolute projected coordinates.
//!
//! Projection entries are quantized to fixed point and weights are doubled, so every
//! coordinate is an integer and deletions cancel insertions exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gg::{count_partitions, for_each_partition, SampleEdges};
use crate::graph::eval::exact_disagree;
use crate::graph::stream::StreamSource;
use crate::graph::{Clustering, EdgeUpdate, GraphSnapshot, NodeId, WeightClass};
use crate::hash::{rng_for, sub_seed};
use crate::sketch::blob::{BlobHeader, Reader, SketchTag, Writer};
use crate::stats::median;

const FIXED_SHIFT: u32 = 16;
const TAIL_CLAMP: f64 = 1.0e6;

/// Projection dimension `ceil(5 eps^-2 ln(2/delta))`. The empirical median of `d` samples
/// of |Cauchy| leaves `[1 - eps, 1 + eps]` with probability at most
/// `2 exp(-2 d (eps/pi)^2)`, and `pi^2 / 2 < 5`.
pub fn dimension(eps: f64, delta: f64) -> usize {
    (5.0 / (eps * eps) * (2.0 / delta).ln()).ceil() as usize
}

#[inline]
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Lexicographic index of pair `{i, j}`, `i < j`, among all pairs of `0..n`.
pub fn pair_index(n: usize, i: NodeId, j: NodeId) -> u64 {
    let (i, j) = if i < j { (i as u64, j as u64) } else { (j as u64, i as u64) };
    let n = n as u64;
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

#[derive(Clone, Debug)]
pub struct NodeL1Sketch {
    n: usize,
    eps: f64,
    delta: f64,
    seed: u64,
    d: usize,
    proj_seed: u64,
    rows: Vec<i128>,
    total: Vec<i128>,
}

impl NodeL1Sketch {
    pub fn new(n: usize, eps: f64, delta: f64, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(format!("need 0 < eps, delta < 1, got eps = {eps}, delta = {delta}")));
        }
        let d = dimension(eps, delta);
        Ok(NodeL1Sketch {
            n,
            eps,
            delta,
            seed,
            d,
            proj_seed: sub_seed(seed, "node-l1-projection"),
            rows: vec![0; n * d],
            total: vec![0; d],
        })
    }

    pub fn from_stream(src: &mut StreamSource, eps: f64, delta: f64, seed: u64) -> Result<Self> {
        let mut sk = Self::new(src.n(), eps, delta, seed)?;
        for e in src.pass() {
            sk.update(&e)?;
        }
        Ok(sk)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    /// 64-bit words retained: `n + 1` rows of `d` 128-bit counters.
    pub fn state_words(&self) -> usize {
        2 * (self.rows.len() + self.total.len())
    }

    pub fn row(&self, v: NodeId) -> &[i128] {
        &self.rows[v * self.d..(v + 1) * self.d]
    }

    /// Quantized projection column of one pair coordinate.
    fn column(&self, pair: u64) -> Vec<i64> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(self.proj_seed ^ splitmix(pair)));
        let cauchy = Cauchy::new(0.0, 1.0).expect("valid Cauchy parameters");
        (0..self.d)
            .map(|_| {
                let c: f64 = cauchy.sample(&mut rng);
                (c.clamp(-TAIL_CLAMP, TAIL_CLAMP) * (1u64 << FIXED_SHIFT) as f64).round() as i64
            })
            .collect()
    }

    pub fn update(&mut self, e: &EdgeUpdate) -> Result<()> {
        if e.u >= self.n || e.v >= self.n || e.u == e.v || e.weight == 0 {
            return Err(Error::MalformedStream(format!("bad update ({}, {}, {}) for n = {}", e.u, e.v, e.weight, self.n)));
        }
        let (i, j) = e.key();
        let w = e.signed_weight() as i128;
        // doubled contributions: 2 a^i and 2 a^j on this coordinate
        let (ci, cj) = if e.weight < 0 { (w, w) } else { (w, -w) };
        let col = self.column(pair_index(self.n, i, j));
        let d = self.d;
        for (r, &p) in col.iter().enumerate() {
            let p = p as i128;
            self.rows[i * d + r] += ci * p;
            self.rows[j * d + r] += cj * p;
            self.total[r] += (ci + cj) * p;
        }
        Ok(())
    }

    /// Sum of rows over `side`.
    fn side_sum(&self, side: &[NodeId]) -> Vec<i128> {
        let mut acc = vec![0i128; self.d];
        for &v in side {
            for (a, &x) in acc.iter_mut().zip(self.row(v)) {
                *a += x;
            }
        }
        acc
    }

    /// Estimate of `disagree(G, C)` for a clustering with one or two clusters.
    pub fn query2(&self, c: &Clustering) -> Result<f64> {
        if c.n() != self.n {
            return Err(Error::InvalidInput("clustering must cover every node".into()));
        }
        if c.k() > 2 {
            return Err(Error::UnsupportedQuery(format!(
                "node sketches answer queries with at most 2 clusters, got {}",
                c.k()
            )));
        }
        let (zero, one): (Vec<NodeId>, Vec<NodeId>) = (0..self.n).partition(|&v| c.label(v) == 0);
        let side = if zero.len() <= one.len() { zero } else { one };
        Ok(self.estimate_side(&side))
    }

    /// Estimate for the two-partition `{side, rest}`, using the cached row total so only the
    /// given side is summed.
    pub fn estimate_side(&self, side: &[NodeId]) -> f64 {
        let s = self.side_sum(side);
        let mut abs: Vec<f64> = s
            .iter()
            .zip(&self.total)
            .map(|(&a, &t)| ((2 * a - t) as f64).abs())
            .collect();
        // undo the doubled weights and the fixed-point scale
        median(&mut abs) / (2.0 * (1u64 << FIXED_SHIFT) as f64)
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.n != other.n || self.seed != other.seed || self.d != other.d {
            return Err(Error::SketchMismatch(format!(
                "cannot merge node sketches (n {} vs {}, seed {} vs {}, d {} vs {})",
                self.n, other.n, self.seed, other.seed, self.d, other.d
            )));
        }
        for (a, b) in self.rows.iter_mut().zip(&other.rows) {
            *a += b;
        }
        for (a, b) in self.total.iter_mut().zip(&other.total) {
            *a += b;
        }
        Ok(())
    }

    pub fn to_blob(&self) -> Vec<u8> {
        let mut w = Writer::new(&BlobHeader {
            tag: SketchTag::NodeL1,
            n: self.n as u64,
            eps: self.eps,
            delta: self.delta,
            seed: self.seed,
        });
        w.u64(self.d as u64);
        for &x in &self.rows {
            w.i128(x);
        }
        w.finish()
    }

    pub fn from_blob(buf: &[u8]) -> Result<Self> {
        let (mut r, h) = Reader::new(buf, SketchTag::NodeL1)?;
        let mut sk = Self::new(h.n as usize, h.eps, h.delta, h.seed)?;
        if r.u64()? as usize != sk.d {
            return Err(Error::SketchMismatch("dimension does not match parameters".into()));
        }
        for x in sk.rows.iter_mut() {
            *x = r.i128()?;
        }
        r.finish()?;
        let d = sk.d;
        for v in 0..sk.n {
            for k in 0..d {
                sk.total[k] += sk.rows[v * d + k];
            }
        }
        Ok(sk)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GgMin2Config {
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    /// Overrides the default sample size.
    pub sample_size: Option<usize>,
    /// Constant `c` in `r = ceil(c eps^-4 w*^2 ln n)`.
    pub r_constant: f64,
    pub max_candidates: u64,
}

impl GgMin2Config {
    pub fn new(eps: f64, seed: u64) -> Self {
        GgMin2Config { eps, delta: 0.05, seed, sample_size: None, r_constant: 64.0, max_candidates: 1 << 22 }
    }

    pub fn sample_size(&self, n: usize, w_star: u64) -> usize {
        self.sample_size.unwrap_or_else(|| {
            let r = self.r_constant * self.eps.powi(-4) * (w_star * w_star) as f64 * (n.max(2) as f64).ln();
            r.ceil().min(usize::MAX as f64) as usize
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GgMin2Outcome {
    pub clustering: Clustering,
    pub estimate: f64,
    pub sample_size: usize,
    pub candidates: usize,
    /// The sample covered every node, so candidates were scored exactly.
    pub exact_fallback: bool,
    pub stored_edges: usize,
    pub state_words: usize,
}

/// Sample-and-assign search for the best clustering with at most two clusters, one pass.
pub fn gg_min_disagree2(src: &mut StreamSource, cfg: &GgMin2Config) -> Result<GgMin2Outcome> {
    let wc = src.weight_class();
    if matches!(wc, WeightClass::Arbitrary { .. }) {
        return Err(Error::UnsupportedWeightClass(
            "min-disagree_2 search needs unit or bounded weights".into(),
        ));
    }
    let n = src.n();
    let r = cfg.sample_size(n, wc.w_star());
    if r >= n {
        return exact_two_partition(src, cfg, r);
    }
    let candidates = count_partitions(r, 2);
    if candidates > cfg.max_candidates as f64 {
        return Err(Error::Refused(format!(
            "sample of {r} nodes gives {candidates:.3e} two-partitions, cap is {}",
            cfg.max_candidates
        )));
    }
    let mut rng = rng_for(cfg.seed, "gg-min2-sample");
    let mut sample = rand::seq::index::sample(&mut rng, n, r).into_vec();
    sample.sort_unstable();
    let mut edges = SampleEdges::new(n, sample);
    let mut sketch = NodeL1Sketch::new(n, cfg.eps, cfg.delta, sub_seed(cfg.seed, "gg-min2-sketch"))?;
    for e in src.pass() {
        edges.observe(&e);
        sketch.update(&e)?;
    }
    edges.finish();

    let mut best: Option<(f64, Clustering)> = None;
    let mut count = 0;
    for_each_partition(r, 2, |labels| {
        count += 1;
        let full = edges.extend(labels, 2, |_| true);
        let side: Vec<NodeId> = (0..n).filter(|&v| full[v] == 0).collect();
        let est = sketch.estimate_side(&side);
        let c = Clustering::from_labels(&full);
        let better = match &best {
            None => true,
            Some((b, bc)) => est < *b || (est == *b && c.labels() < bc.labels()),
        };
        if better {
            best = Some((est, c));
        }
    });
    let (estimate, clustering) = best.expect("at least one partition of a nonempty sample");
    Ok(GgMin2Outcome {
        clustering,
        estimate,
        sample_size: r,
        candidates: count,
        exact_fallback: false,
        stored_edges: edges.stored(),
        state_words: sketch.state_words() + 2 * edges.stored() + r,
    })
}

fn exact_two_partition(src: &mut StreamSource, cfg: &GgMin2Config, r: usize) -> Result<GgMin2Outcome> {
    let n = src.n();
    let count = count_partitions(n, 2);
    if count > cfg.max_candidates as f64 {
        return Err(Error::Refused(format!(
            "sample size {r} covers all {n} nodes; exact search over {count:.3e} two-partitions exceeds cap {}",
            cfg.max_candidates
        )));
    }
    let s: GraphSnapshot = src.snapshot();
    let mut best: Option<(u64, Clustering)> = None;
    // lexicographic enumeration plus strict improvement keeps the smallest labelling on ties
    for_each_partition(n, 2, |labels| {
        let c = Clustering::from_labels(labels);
        let d = exact_disagree(&s, &c);
        if best.as_ref().is_none_or(|(b, _)| d < *b) {
            best = Some((d, c));
        }
    });
    let (d, clustering) = best.unwrap_or((0, Clustering::one_cluster(n)));
    Ok(GgMin2Outcome {
        clustering,
        estimate: d as f64,
        sample_size: r,
        candidates: count as usize,
        exact_fallback: true,
        stored_edges: s.num_edges(),
        state_words: 3 * s.num_edges(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::brute::{brute_force_opt, Objective};
    use crate::graph::gen::{gen_instance, InstanceKind};
    use std::collections::HashMap;

    /// Exact doubled `a^i` vectors, kept alongside the sketch as an oracle.
    struct DenseShadow {
        a: Vec<HashMap<u64, i64>>,
        n: usize,
    }

    impl DenseShadow {
        fn new(n: usize) -> Self {
            DenseShadow { a: vec![HashMap::new(); n], n }
        }

        fn update(&mut self, e: &EdgeUpdate) {
            let (i, j) = e.key();
            let w = e.signed_weight();
            let p = pair_index(self.n, i, j);
            let (ci, cj) = if e.weight < 0 { (w, w) } else { (w, -w) };
            *self.a[i].entry(p).or_insert(0) += ci;
            *self.a[j].entry(p).or_insert(0) += cj;
        }

        fn combined_l1(&self, c: &Clustering) -> i64 {
            let mut v: HashMap<u64, i64> = HashMap::new();
            for (node, row) in self.a.iter().enumerate() {
                let s = if c.label(node) == 0 { 1 } else { -1 };
                for (&p, &x) in row {
                    *v.entry(p).or_insert(0) += s * x;
                }
            }
            v.values().map(|x| x.abs()).sum::<i64>() / 2
        }
    }

    #[test]
    fn pair_indices_are_lexicographic() {
        let n = 5;
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                assert_eq!(pair_index(n, i, j), k);
                assert_eq!(pair_index(n, j, i), k);
                k += 1;
            }
        }
    }

    #[test]
    fn dense_shadow_matches_exact_disagree() {
        let inst = gen_instance(&InstanceKind::RandomSigned { density: 0.6, w_star: 4 }, 10, 3).unwrap();
        let s = inst.source.oracle_snapshot();
        let mut shadow = DenseShadow::new(10);
        for e in inst.source.updates() {
            shadow.update(e);
        }
        let mut rng = rng_for(1, "shadow-test");
        for _ in 0..100 {
            let labels: Vec<usize> = (0..10).map(|_| rand::Rng::random_range(&mut rng, 0..2)).collect();
            let c = Clustering::from_labels(&labels);
            assert_eq!(shadow.combined_l1(&c) as u64, exact_disagree(&s, &c));
        }
    }

    #[test]
    fn coordinate_identities() {
        let mut sh = DenseShadow::new(4);
        sh.update(&EdgeUpdate::insert(0, 2, 5));
        sh.update(&EdgeUpdate::insert(1, 3, -3));
        let p02 = pair_index(4, 0, 2);
        let p13 = pair_index(4, 1, 3);
        assert_eq!(sh.a[0][&p02] + sh.a[2][&p02], 0);
        // doubled: a^1 + a^3 = -3 on the original scale
        assert_eq!((sh.a[1][&p13] + sh.a[3][&p13]) / 2, -3);
    }

    #[test]
    fn insert_delete_restores_exactly() {
        let mut sk = NodeL1Sketch::new(6, 0.3, 0.1, 2).unwrap();
        sk.update(&EdgeUpdate::insert(0, 1, 3)).unwrap();
        let before = sk.clone();
        sk.update(&EdgeUpdate::insert(2, 5, -7)).unwrap();
        sk.update(&EdgeUpdate::delete(2, 5, -7)).unwrap();
        assert_eq!(sk.rows, before.rows);
        assert_eq!(sk.total, before.total);
    }

    #[test]
    fn empty_graph_and_three_cluster_queries() {
        let sk = NodeL1Sketch::new(5, 0.3, 0.1, 2).unwrap();
        assert_eq!(sk.query2(&Clustering::from_labels(&[0, 1, 0, 1, 1])).unwrap(), 0.0);
        assert!(matches!(
            sk.query2(&Clustering::from_labels(&[0, 1, 2, 1, 1])),
            Err(Error::UnsupportedQuery(_))
        ));
    }

    #[test]
    fn one_cluster_query_counts_negative_weight() {
        let inst = gen_instance(&InstanceKind::RandomSigned { density: 0.5, w_star: 3 }, 25, 4).unwrap();
        let mut src = inst.source;
        let s = src.oracle_snapshot();
        let sk = NodeL1Sketch::from_stream(&mut src, 0.1, 0.01, 7).unwrap();
        let est = sk.query2(&Clustering::one_cluster(25)).unwrap();
        let neg = s.negative_weight() as f64;
        assert!((est - neg).abs() <= 0.1 * neg, "{est} vs {neg}");
    }

    #[test]
    fn blob_round_trip() {
        let mut sk = NodeL1Sketch::new(4, 0.4, 0.2, 3).unwrap();
        sk.update(&EdgeUpdate::insert(0, 3, -2)).unwrap();
        let back = NodeL1Sketch::from_blob(&sk.to_blob()).unwrap();
        assert_eq!(back.rows, sk.rows);
        assert_eq!(back.total, sk.total);
        let other = NodeL1Sketch::new(4, 0.4, 0.2, 4).unwrap();
        assert!(sk.merge(&other).is_err());
    }

    #[test]
    fn clean_two_cliques_recovered() {
        let inst = gen_instance(&InstanceKind::Cliques { k: 2, negatives: true }, 16, 0).unwrap();
        let mut src = inst.source;
        let mut cfg = GgMin2Config::new(0.3, 5);
        cfg.sample_size = Some(6);
        let out = gg_min_disagree2(&mut src, &cfg).unwrap();
        assert!(!out.exact_fallback);
        assert_eq!(&out.clustering, inst.planted.as_ref().unwrap());
        assert_eq!(out.estimate, 0.0);
        assert_eq!(src.passes(), 1);
    }

    #[test]
    fn single_negative_edge_tie_break() {
        let s = GraphSnapshot::from_edges(4, WeightClass::Unit, [(1, 2, -1)]).unwrap();
        let mut src = StreamSource::from_snapshot(&s);
        let out = gg_min_disagree2(&mut src, &GgMin2Config::new(0.3, 1)).unwrap();
        assert!(out.exact_fallback);
        assert_eq!(out.estimate, 0.0);
        assert_eq!(out.clustering.labels(), &[0, 0, 1, 0]);
    }

    #[test]
    fn exact_fallback_matches_brute_force() {
        for seed in 0..5 {
            let inst = gen_instance(&InstanceKind::RandomSigned { density: 1.0, w_star: 1 }, 9, seed).unwrap();
            let mut src = inst.source;
            let s = src.oracle_snapshot();
            let out = gg_min_disagree2(&mut src, &GgMin2Config::new(0.3, seed)).unwrap();
            let opt = brute_force_opt(&s, Objective::MinDisagree, Some(2)).unwrap().1;
            assert_eq!(exact_disagree(&s, &out.clustering), opt);
        }
    }
}

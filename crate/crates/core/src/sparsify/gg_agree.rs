//! One-pass sample-and-assign search for max-agree with at most `k` clusters, scored on a
//! sparsifier built during the same pass.
//!
//! Nodes are split round-robin into `m = ceil(4/eps)` parts. For each part a sample is
//! drawn from the other parts before the stream starts, and the pass stores every edge
//! incident to a sample. Afterwards every labelling of each sample induces an assignment
//! of its part by the argmax rule, and every combination of per-part assignments is
//! scored on the sparsifier. For weights bounded by `w*`, eps is divided by `w*` and the
//! sample grows by `w*^2`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{estimate_agree, SparsifierBuilder, SparsifyConfig};
use crate::error::{Error, Result};
use crate::gg::{for_each_partition, SampleEdges};
use crate::graph::stream::StreamSource;
use crate::graph::{Clustering, NodeId, WeightClass};
use crate::hash::rng_for;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GgAgreeConfig {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub sample_size: Option<usize>,
    /// Constant `c` in `r = ceil(c eps^-2 ln(2k/delta)) w*^2`.
    pub r_constant: f64,
    /// Cap on labellings of a single sample.
    pub max_labelings: u64,
    /// Cap on combined candidate clusterings.
    pub max_candidates: u64,
}

impl GgAgreeConfig {
    pub fn new(k: usize, eps: f64, seed: u64) -> Self {
        GgAgreeConfig {
            k,
            eps,
            delta: 0.05,
            seed,
            sample_size: None,
            r_constant: 4.0,
            max_labelings: 1 << 20,
            max_candidates: 1 << 22,
        }
    }

    pub fn sample_size(&self, w_star: u64) -> usize {
        self.sample_size.unwrap_or_else(|| {
            let base = (self.r_constant / (self.eps * self.eps) * (2.0 * self.k as f64 / self.delta).ln()).ceil();
            (base * (w_star * w_star) as f64).min(usize::MAX as f64) as usize
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GgAgreeOutcome {
    pub clustering: Clustering,
    /// Agreement of the returned clustering on the sparsifier.
    pub estimate: f64,
    pub parts: usize,
    pub eps_effective: f64,
    pub sample_size: usize,
    pub candidates: u64,
    pub stored_edges: usize,
    pub sparsifier_edges: usize,
    pub state_words: usize,
}

pub fn gg_max_agree_k(src: &mut StreamSource, cfg: &GgAgreeConfig) -> Result<GgAgreeOutcome> {
    let wc = src.weight_class();
    if matches!(wc, WeightClass::Arbitrary { .. }) {
        return Err(Error::UnsupportedWeightClass("max-agree_k search needs unit or bounded weights".into()));
    }
    if cfg.k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let n = src.n();
    let w_star = wc.w_star();
    let eps_eff = cfg.eps / w_star as f64;
    let m = (4.0 / eps_eff).ceil() as usize;
    let r = cfg.sample_size(w_star);

    let parts: Vec<Vec<NodeId>> = (0..m.min(n)).map(|j| (j..n).step_by(m).collect()).collect();
    let mut samples: Vec<SampleEdges> = Vec::with_capacity(parts.len());
    for (j, part) in parts.iter().enumerate() {
        let others: Vec<NodeId> = (0..n).filter(|v| v % m != j).collect();
        let size = r.min(others.len());
        let mut rng = rng_for(cfg.seed, &format!("gg-agree-sample-{j}"));
        let mut pick: Vec<NodeId> = rand::seq::index::sample(&mut rng, others.len(), size)
            .into_iter()
            .map(|i| others[i])
            .collect();
        pick.sort_unstable();
        debug_assert!(pick.iter().all(|v| !part.contains(v)));
        samples.push(SampleEdges::new(n, pick));
    }
    for (j, s) in samples.iter().enumerate() {
        let labelings = (cfg.k as f64).powi(s.sample().len() as i32);
        if j > 0 && labelings > cfg.max_labelings as f64 {
            return Err(Error::Refused(format!(
                "part {j} sample of {} nodes has {labelings:.3e} {}-labellings, cap is {}",
                s.sample().len(),
                cfg.k,
                cfg.max_labelings
            )));
        }
    }

    let mut builder = SparsifierBuilder::new(n, &SparsifyConfig::new(cfg.eps, rng_seed(cfg.seed)), src.is_insert_only())?;
    for e in src.pass() {
        for s in samples.iter_mut() {
            s.observe(&e);
        }
        builder.push(&e);
    }
    for s in samples.iter_mut() {
        s.finish();
    }
    let sparsifier = builder.finish();
    let h = sparsifier.combined();

    // distinct assignments of each part
    let mut options: Vec<Vec<Vec<usize>>> = Vec::with_capacity(parts.len());
    let mut scratch = Vec::new();
    for (j, (part, s)) in parts.iter().zip(&samples).enumerate() {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut list = Vec::new();
        let mut record = |labels: &[usize]| {
            let a: Vec<usize> = part.iter().map(|&v| s.assign(v, labels, cfg.k, &mut scratch)).collect();
            if seen.insert(a.clone()) {
                list.push(a);
            }
        };
        let len = s.sample().len();
        if j == 0 {
            // label symmetry is broken once, on the first part
            for_each_partition(len, cfg.k, &mut record);
        } else {
            for_each_labeling(len, cfg.k, &mut record);
        }
        options.push(list);
    }
    let total: f64 = options.iter().map(|o| o.len() as f64).product();
    if total > cfg.max_candidates as f64 {
        return Err(Error::Refused(format!(
            "{total:.3e} combined candidate clusterings from {} parts exceed cap {}",
            parts.len(),
            cfg.max_candidates
        )));
    }

    let one = Clustering::one_cluster(n);
    let floor = sparsifier.plus.total_weight();
    let mut best = (estimate_agree(&h, &one), one);
    let mut idx = vec![0usize; options.len()];
    let mut labels = vec![0usize; n];
    let mut candidates = 0u64;
    loop {
        for (j, part) in parts.iter().enumerate() {
            for (p, &v) in part.iter().enumerate() {
                labels[v] = options[j][idx[j]][p];
            }
        }
        let c = Clustering::from_labels(&labels);
        let score = estimate_agree(&h, &c);
        candidates += 1;
        if score > best.0 {
            best = (score, c);
        }
        if !advance(&mut idx, &options) {
            break;
        }
    }
    // the all-in-one clustering is a candidate, so the winner cannot fall below w(H+)
    assert!(best.0 + 1e-9 * floor.max(1.0) >= floor, "max-agree below the positive weight");
    let stored: usize = samples.iter().map(SampleEdges::stored).sum();
    Ok(GgAgreeOutcome {
        clustering: best.1,
        estimate: best.0,
        parts: parts.len(),
        eps_effective: eps_eff,
        sample_size: r,
        candidates,
        stored_edges: stored,
        sparsifier_edges: h.len(),
        state_words: 2 * stored + 3 * sparsifier.peak_stored_edges + samples.iter().map(|s| s.sample().len()).sum::<usize>(),
    })
}

fn rng_seed(seed: u64) -> u64 {
    crate::hash::sub_seed(seed, "gg-agree-sparsifier")
}

fn advance(idx: &mut [usize], options: &[Vec<Vec<usize>>]) -> bool {
    for j in 0..idx.len() {
        idx[j] += 1;
        if idx[j] < options[j].len() {
            return true;
        }
        idx[j] = 0;
    }
    false
}

/// Every labelling of `len` items with labels `0..k`, in lexicographic order.
fn for_each_labeling(len: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    let mut labels = vec![0usize; len];
    loop {
        f(&labels);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
        }
    }
}

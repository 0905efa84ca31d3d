//! Sample-and-assign min-disagree_k over several passes.
//!
//! Pass `i` draws `k'` samples of `N_i = 2 r 2^(2^(i-1))` nodes from the unfixed set `V_i`
//! and stores their edges into `V_i`. Each round consumes one sample: the first
//! `min(r, |R|)` of its nodes still unfixed are partitioned every possible way, the rest of
//! `R` is assigned by the argmax rule, and the candidate with the smallest sketched
//! disagreement wins. Its clusters of at least `|R| / 2k'` nodes are fixed and the rest
//! recurse. A new pass starts when no sample has enough unfixed nodes left.

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gg::{count_partitions, for_each_partition, SampleEdges};
use crate::graph::stream::StreamSource;
use crate::graph::{Clustering, NodeId};
use crate::hash::{rng_for, sub_seed};
use crate::sketch::bilinear::{BilinearParams, BilinearSketch};

/// Sign tables above this many entries are skipped in favour of hashing per query.
const TABLE_LIMIT: usize = 1 << 26;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GgkConfig {
    pub k: usize,
    pub eps: f64,
    pub seed: u64,
    /// Constant `c` in `r = ceil(c k^2 eps^-4 ln n)`.
    pub r_constant: f64,
    /// Overrides `r`.
    pub sample_size: Option<usize>,
    /// Refuse rounds with more candidate partitions than this.
    pub max_candidates: u64,
    /// Bilinear sketch accuracy for scoring candidates; defaults to `eps / 3`.
    pub sketch_eps: f64,
    pub sketch_delta: f64,
}

impl GgkConfig {
    pub fn new(k: usize, eps: f64, seed: u64) -> Self {
        GgkConfig {
            k,
            eps,
            seed,
            r_constant: 1.0,
            sample_size: None,
            max_candidates: 1 << 20,
            sketch_eps: (eps / 3.0).min(0.5),
            sketch_delta: 0.01,
        }
    }

    pub fn r(&self, n: usize) -> usize {
        self.sample_size.unwrap_or_else(|| {
            let r = self.r_constant * (self.k * self.k) as f64 * self.eps.powi(-4) * (n.max(2) as f64).ln();
            r.ceil().min(usize::MAX as f64) as usize
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    pub pass: usize,
    pub sample: usize,
    pub unfixed_before: usize,
    pub clusters_left: usize,
    pub candidates: usize,
    /// Minimum size for a cluster to be fixed, `|R| / 2k'`.
    pub threshold: f64,
    pub fixed_sizes: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PassReport {
    pub unfixed: usize,
    pub sample_size: usize,
    pub stored_edges: usize,
    /// `|V_i| / 2^(2^(i-1))`, the unfixed count the next pass should not exceed.
    pub decay_target: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GgkOutcome {
    pub clustering: Clustering,
    /// Sketched disagreement of the result.
    pub estimate: f64,
    pub r: usize,
    pub passes: usize,
    /// `min(k - 1, ceil(log2 log2 n) + 1)`.
    pub pass_bound: usize,
    pub pass_reports: Vec<PassReport>,
    pub rounds: Vec<RoundReport>,
    pub peak_stored_edges: usize,
    pub state_words: usize,
}

pub fn pass_bound(n: usize, k: usize) -> usize {
    let ll = if n <= 2 { 0 } else { (n as f64).log2().log2().ceil() as usize };
    (k - 1).min(ll + 1)
}

/// `2 r 2^(2^(i-1))`, saturating.
fn sample_size(r: usize, pass: usize) -> usize {
    let e = 1u32.checked_shl((pass - 1) as u32).unwrap_or(u32::MAX);
    let grow = 1usize.checked_shl(e).unwrap_or(usize::MAX);
    (2 * r).saturating_mul(grow)
}

struct Scorer {
    sketch: BilinearSketch,
    table: Option<crate::sketch::bilinear::SignTable>,
}

impl Scorer {
    fn query(&self, c: &Clustering) -> f64 {
        match &self.table {
            Some(t) => self.sketch.query_with(t, c),
            None => self.sketch.query(c),
        }
    }
}

pub fn gg_min_disagree_k(src: &mut StreamSource, cfg: &GgkConfig) -> Result<GgkOutcome> {
    if !src.weight_class().is_unit() {
        return Err(Error::UnsupportedWeightClass("min-disagree_k passes need unit weights".into()));
    }
    if cfg.k < 2 {
        return Err(Error::InvalidInput(format!("k must be at least 2, got {}", cfg.k)));
    }
    let n = src.n();
    let r = cfg.r(n).max(1);
    let params = BilinearParams::new(cfg.sketch_eps, cfg.sketch_delta)?;
    let mut sketch = Some(BilinearSketch::new(n, params, sub_seed(cfg.seed, "ggk-sketch")));
    let mut table = sketch.as_ref().filter(|sk| sk.repetitions() * n <= TABLE_LIMIT).map(|sk| sk.sign_table());
    let mut scorer: Option<Scorer> = None;
    let mut rng = rng_for(cfg.seed, "ggk-samples");
    let passes_before = src.passes();

    let mut label = vec![usize::MAX; n];
    let mut next_label = 0;
    let mut unfixed: Vec<NodeId> = (0..n).collect();
    let mut k_left = cfg.k;
    let mut pass_reports = Vec::new();
    let mut rounds = Vec::new();
    let mut peak_stored = 0;
    let mut counted = 0;

    while !unfixed.is_empty() && k_left >= 2 {
        counted += 1;
        let pass = counted;
        let size = sample_size(r, pass).min(unfixed.len());
        let samples: Vec<Vec<NodeId>> = (0..k_left)
            .map(|_| {
                let mut pool = unfixed.clone();
                pool.partial_shuffle(&mut rng, size).0.to_vec()
            })
            .collect();
        let mut members: Vec<NodeId> = samples.iter().flatten().copied().collect();
        members.sort_unstable();
        members.dedup();
        let mut in_v = vec![false; n];
        for &v in &unfixed {
            in_v[v] = true;
        }
        let mut edges = SampleEdges::new(n, members);
        for e in src.pass() {
            if let Some(sk) = sketch.as_mut() {
                match &table {
                    Some(t) => sk.update_with(t, &e)?,
                    None => sk.update(&e)?,
                }
            }
            if in_v[e.u] && in_v[e.v] {
                edges.observe(&e);
            }
        }
        edges.finish();
        if let Some(sk) = sketch.take() {
            scorer = Some(Scorer { sketch: sk, table: table.take() });
        }
        let score = scorer.as_ref().expect("sketch is built on the first pass");
        peak_stored = peak_stored.max(edges.stored());
        pass_reports.push(PassReport {
            unfixed: unfixed.len(),
            sample_size: size,
            stored_edges: edges.stored(),
            decay_target: unfixed.len() as f64 / 2f64.powf(2f64.powi(pass as i32 - 1)),
        });

        let mut in_r = in_v;
        for (si, sample) in samples.iter().enumerate() {
            if unfixed.is_empty() || k_left < 2 {
                break;
            }
            let need = r.min(unfixed.len());
            let s: Vec<NodeId> = sample.iter().copied().filter(|&v| in_r[v]).take(need).collect();
            if s.len() < need {
                continue;
            }
            let total = count_partitions(s.len(), k_left);
            if total > cfg.max_candidates as f64 {
                return Err(Error::Refused(format!(
                    "round with {} sample nodes and k' = {k_left} has {total:.3e} partitions, cap {}",
                    s.len(),
                    cfg.max_candidates
                )));
            }
            let mut pos_in_s = vec![usize::MAX; n];
            for (i, &v) in s.iter().enumerate() {
                pos_in_s[v] = i;
            }
            let member_index: Vec<Option<usize>> = edges.sample().iter().map(|&m| (pos_in_s[m] != usize::MAX).then_some(pos_in_s[m])).collect();
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut raw = vec![0usize; n];
            let mut gain = vec![0i64; k_left];
            let mut candidates = 0;
            for_each_partition(s.len(), k_left, |part| {
                candidates += 1;
                for v in 0..n {
                    raw[v] = if label[v] != usize::MAX {
                        label[v]
                    } else if pos_in_s[v] != usize::MAX {
                        next_label + part[pos_in_s[v]]
                    } else {
                        gain.iter_mut().for_each(|g| *g = 0);
                        for &(mi, w) in edges.row(v) {
                            if let Some(p) = member_index[mi] {
                                gain[part[p]] += w;
                            }
                        }
                        let mut top = 0;
                        for j in 1..k_left {
                            if gain[j] > gain[top] {
                                top = j;
                            }
                        }
                        next_label + top
                    };
                }
                let est = score.query(&Clustering::from_labels(&raw));
                if best.as_ref().is_none_or(|(b, _)| est < *b) {
                    best = Some((est, raw.clone()));
                }
            });
            let (_, raw) = best.expect("a nonempty sample has a partition");
            let threshold = unfixed.len() as f64 / (2 * k_left) as f64;
            let mut sizes = vec![0usize; k_left];
            for &v in &unfixed {
                sizes[raw[v] - next_label] += 1;
            }
            let mut fixed_sizes = Vec::new();
            let mut relabel = vec![usize::MAX; k_left];
            for (j, &sz) in sizes.iter().enumerate() {
                if sz > 0 && sz as f64 >= threshold {
                    relabel[j] = next_label + fixed_sizes.len();
                    fixed_sizes.push(sz);
                }
            }
            rounds.push(RoundReport {
                pass,
                sample: si,
                unfixed_before: unfixed.len(),
                clusters_left: k_left,
                candidates,
                threshold,
                fixed_sizes: fixed_sizes.clone(),
            });
            for &v in &unfixed {
                let j = raw[v] - next_label;
                if relabel[j] != usize::MAX {
                    label[v] = relabel[j];
                    in_r[v] = false;
                }
            }
            next_label += fixed_sizes.len();
            k_left -= fixed_sizes.len();
            unfixed.retain(|&v| label[v] == usize::MAX);
        }
    }
    // one cluster left: everything unfixed joins it
    for &v in &unfixed {
        label[v] = next_label;
    }

    let passes = src.passes() - passes_before;
    assert_eq!(passes, counted, "pass accounting drifted");
    let bound = pass_bound(n, cfg.k);
    assert!(passes <= bound.max(1), "{passes} passes exceed the bound {bound}");
    let clustering = Clustering::from_labels(&label);
    let estimate = match (&scorer, &sketch) {
        (Some(s), _) => s.query(&clustering),
        (None, Some(sk)) => sk.query(&clustering),
        (None, None) => 0.0,
    };
    let sketch_words = scorer.as_ref().map(|s| s.sketch.state_words()).or(sketch.as_ref().map(|s| s.state_words())).unwrap_or(0);
    Ok(GgkOutcome {
        clustering,
        estimate,
        r,
        passes,
        pass_bound: bound,
        pass_reports,
        rounds,
        peak_stored_edges: peak_stored,
        state_words: sketch_words + 2 * peak_stored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::brute::{brute_force_opt, Objective};
    use crate::graph::eval::exact_disagree;
    use crate::graph::{GraphSnapshot, WeightClass};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn planted(labels: &[usize], flip: f64, seed: u64) -> GraphSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = labels.len();
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                let same = labels[u] == labels[v];
                let sign = if same != rng.random_bool(flip) { 1 } else { -1 };
                edges.push((u, v, sign));
            }
        }
        GraphSnapshot::from_edges(n, WeightClass::Unit, edges).unwrap()
    }

    #[test]
    fn planted_two_clusters_in_one_pass() {
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i % 3 == 0)).collect();
        let s = planted(&labels, 0.0, 0);
        let cfg = GgkConfig { sample_size: Some(10), ..GgkConfig::new(2, 0.3, 4) };
        let mut src = StreamSource::from_snapshot(&s);
        let out = gg_min_disagree_k(&mut src, &cfg).unwrap();
        assert_eq!(out.clustering, Clustering::from_labels(&labels));
        assert_eq!(exact_disagree(&s, &out.clustering), 0);
        assert_eq!(out.passes, 1);
        assert_eq!(src.passes(), 1);
    }

    #[test]
    fn fixed_clusters_meet_the_size_threshold() {
        for seed in 0..5 {
            let labels: Vec<usize> = (0..60).map(|i| if i < 40 { 0 } else if i < 52 { 1 } else { 2 + i % 2 }).collect();
            let s = planted(&labels, 0.05, seed);
            let cfg = GgkConfig { sample_size: Some(7), sketch_eps: 0.25, sketch_delta: 0.1, ..GgkConfig::new(4, 0.3, seed) };
            let out = gg_min_disagree_k(&mut StreamSource::from_snapshot(&s), &cfg).unwrap();
            for round in &out.rounds {
                assert!(round.fixed_sizes.iter().all(|&sz| sz as f64 >= round.threshold));
                assert!(!round.fixed_sizes.is_empty());
                let floor = round.unfixed_before as f64 / (2 * cfg.k) as f64;
                assert!(round.fixed_sizes.iter().all(|&sz| sz as f64 >= floor));
            }
            assert!(out.passes <= out.pass_bound);
            assert!(out.clustering.k() <= cfg.k);
        }
    }

    #[test]
    fn small_random_graphs_against_brute_force() {
        let eps = 0.3;
        let mut good = 0;
        let seeds = 8;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let labels: Vec<usize> = (0..12).map(|_| rng.random_range(0..3)).collect();
            let s = planted(&labels, 0.2, seed);
            let cfg = GgkConfig { sample_size: Some(8), sketch_eps: 0.2, sketch_delta: 0.05, ..GgkConfig::new(3, eps, seed) };
            let out = gg_min_disagree_k(&mut StreamSource::from_snapshot(&s), &cfg).unwrap();
            let (_, opt) = brute_force_opt(&s, Objective::MinDisagree, Some(3)).unwrap();
            if exact_disagree(&s, &out.clustering) as f64 <= (1.0 + eps) * opt as f64 {
                good += 1;
            }
        }
        assert!(good * 10 >= seeds * 7, "{good} of {seeds}");
    }

    #[test]
    fn enumeration_cap_is_a_refusal() {
        let labels = vec![0; 20];
        let s = planted(&labels, 0.0, 0);
        let cfg = GgkConfig { sample_size: Some(15), max_candidates: 100, ..GgkConfig::new(3, 0.3, 0) };
        assert!(gg_min_disagree_k(&mut StreamSource::from_snapshot(&s), &cfg).unwrap_err().is_refusal());
    }

    #[test]
    fn sample_sizes_square_their_growth() {
        assert_eq!(sample_size(3, 1), 12);
        assert_eq!(sample_size(3, 2), 24);
        assert_eq!(sample_size(3, 3), 96);
        assert_eq!(sample_size(3, 200), usize::MAX);
        assert_eq!(pass_bound(10_000, 10), 5);
        assert_eq!(pass_bound(10_000, 3), 2);
    }
}

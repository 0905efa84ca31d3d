//! One-pass max-agree: sparsify, bisect on the objective level, round at the best level found.

use serde::Serialize;

use super::mmw::{mmw_solve, MmwOptions, MmwResult};
use super::round::{round_solution, RoundingChoice};
use super::{SdpConfig, SdpObjective};
use crate::error::{Error, Result};
use crate::graph::stream::StreamSource;
use crate::graph::Clustering;
use crate::hash::{rng_for, sub_seed};
use crate::sparsify::{SparsifierBuilder, SparsifyConfig};
use crate::trace::TraceWriter;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AlphaProbe {
    pub alpha: f64,
    pub feasible: bool,
    /// Infeasibility came with an eigenvalue certificate rather than an exhausted budget.
    pub certified: bool,
    pub iterations: usize,
    pub iteration_bound: usize,
    pub emitted: [usize; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct MaxAgreeOutcome {
    pub clustering: Clustering,
    /// Exact agreement on the sparsifier.
    pub agreement: f64,
    pub total_weight: f64,
    pub delta: f64,
    /// Largest level at which the solver returned a candidate.
    pub alpha: Option<f64>,
    pub probes: Vec<AlphaProbe>,
    pub choice: Option<RoundingChoice>,
    /// Largest `| ||x_i||^2 - 1 |` and smallest `x_i . x_j` over surviving nodes and edges
    /// of the rounded candidate.
    pub norm_deviation: Option<f64>,
    pub min_edge_dot: Option<f64>,
    pub ignored_nodes: usize,
    pub ignored_edges: usize,
    pub sparsifier_edges: usize,
    pub peak_stored_edges: usize,
}

pub fn solve_max_agree(src: &mut StreamSource, cfg: &SdpConfig, mut trace: Option<&mut TraceWriter>) -> Result<MaxAgreeOutcome> {
    let n = src.n();
    let delta = cfg.delta();
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1/4], got {delta}")));
    }
    let scfg = SparsifyConfig { eps: cfg.eps.min(1.0), seed: sub_seed(cfg.seed, "sdp-sparsifier"), oversample: cfg.oversample, chunk: None };
    let mut builder = SparsifierBuilder::new(n, &scfg, src.is_insert_only())?;
    for e in src.pass() {
        builder.push(&e);
    }
    let sp = builder.finish();
    let h = sp.combined();
    let obj = SdpObjective::new(n, h.edges.iter().copied());
    let w = obj.total_weight;
    let mut out = MaxAgreeOutcome {
        clustering: Clustering::singletons(n),
        agreement: 0.0,
        total_weight: w,
        delta,
        alpha: None,
        probes: Vec::new(),
        choice: None,
        norm_deviation: None,
        min_edge_dot: None,
        ignored_nodes: 0,
        ignored_edges: 0,
        sparsifier_edges: h.len(),
        peak_stored_edges: sp.peak_stored_edges,
    };
    if obj.edges.is_empty() {
        return Ok(out);
    }
    // one side empty: a trivial clustering agrees with everything
    let all_positive = obj.edges.iter().all(|e| e.2 > 0.0);
    if all_positive || obj.edges.iter().all(|e| e.2 < 0.0) {
        out.clustering = if all_positive { Clustering::one_cluster(n) } else { Clustering::singletons(n) };
        out.agreement = w;
        out.choice = Some(if all_positive { RoundingChoice::OneCluster } else { RoundingChoice::Singletons });
        return Ok(out);
    }

    let opts = MmwOptions {
        max_iterations: cfg.max_iterations,
        projection_dim: cfg.projection_dim,
        precision: cfg.precision,
        seed: sub_seed(cfg.seed, "sdp-mmw"),
    };
    let mut best = None;
    let mut probe = |alpha: f64, trace: &mut Option<&mut TraceWriter>, probes: &mut Vec<AlphaProbe>| -> Result<bool> {
        let r = mmw_solve(&obj, delta, alpha, &opts, trace.as_deref_mut())?;
        let (feasible, certified) = match &r.result {
            MmwResult::Feasible { .. } => (true, false),
            MmwResult::Infeasible { certified } => (false, *certified),
        };
        probes.push(AlphaProbe {
            alpha,
            feasible,
            certified,
            iterations: r.iterations,
            iteration_bound: r.iteration_bound,
            emitted: r.emitted,
        });
        if let MmwResult::Feasible { x, survivors } = r.result {
            best = Some((alpha, x, survivors));
        }
        Ok(feasible)
    };
    let (mut lo, mut hi) = (w / 2.0, w);
    let mut probes = Vec::new();
    if probe(lo, &mut trace, &mut probes)? {
        while hi - lo > delta * w {
            let mid = (lo + hi) / 2.0;
            if probe(mid, &mut trace, &mut probes)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        log::warn!("no candidate at alpha = W/2; falling back to trivial clusterings");
    }
    let top_feasible = probes.iter().filter(|p| p.feasible).map(|p| p.alpha).fold(f64::NEG_INFINITY, f64::max);
    let low_infeasible = probes.iter().filter(|p| !p.feasible).map(|p| p.alpha).fold(f64::INFINITY, f64::min);
    assert!(top_feasible < low_infeasible, "alpha search is not monotone");
    out.probes = probes;

    let rounded = match best {
        Some((alpha, x, survivors)) => {
            out.alpha = Some(alpha);
            let kept: Vec<usize> = (0..obj.active()).filter(|&i| survivors.nodes[i]).collect();
            out.norm_deviation = kept.iter().map(|&i| (x.norm2(i) - 1.0).abs()).reduce(f64::max);
            out.min_edge_dot = obj
                .edges
                .iter()
                .zip(&survivors.edges)
                .filter(|(_, &k)| k)
                .map(|(&(i, j, _), _)| x.dot(i, j))
                .reduce(f64::min);
            out.ignored_nodes = obj.active() - kept.len();
            out.ignored_edges = survivors.edges.iter().filter(|&&k| !k).count();
            let mut rng = rng_for(cfg.seed, "sdp-rounding");
            round_solution(&obj, &x, &survivors, cfg.trials, &mut rng)
        }
        None => {
            let mut rng = rng_for(cfg.seed, "sdp-rounding");
            let x = super::GramFactor::identity(obj.active());
            let none = super::oracle::Survivors { nodes: vec![true; obj.active()], edges: Vec::new(), value: 0.0 };
            round_solution(&obj, &x, &none, 0, &mut rng)
        }
    };
    out.clustering = obj.lift(&rounded.clustering);
    out.agreement = rounded.agreement;
    out.choice = Some(rounded.choice);
    assert!(out.agreement >= w / 2.0 - 1e-9 * w, "agreement below the trivial W/2");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::brute::{brute_force_opt, Objective};
    use crate::graph::eval::exact_agree;
    use crate::graph::{GraphSnapshot, NodeId, WeightClass};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn snapshot(n: usize, edges: &[(NodeId, NodeId, i64)]) -> GraphSnapshot {
        GraphSnapshot::from_edges(n, WeightClass::Unit, edges.iter().copied()).unwrap()
    }

    fn random_unit(n: usize, seed: u64) -> GraphSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v, if rng.random_bool(0.5) { 1 } else { -1 }));
            }
        }
        snapshot(n, &edges)
    }

    #[test]
    fn all_positive_graph_is_one_cluster() {
        let s = snapshot(4, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)]);
        let out = solve_max_agree(&mut StreamSource::from_snapshot(&s), &SdpConfig::new(0.4, 0), None).unwrap();
        assert_eq!(out.clustering, Clustering::one_cluster(4));
        assert_eq!(out.agreement, 3.0);
    }

    #[test]
    fn all_negative_graph_is_singletons() {
        let s = snapshot(4, &[(0, 1, -1), (1, 2, -1), (2, 3, -1)]);
        let out = solve_max_agree(&mut StreamSource::from_snapshot(&s), &SdpConfig::new(0.4, 0), None).unwrap();
        assert_eq!(out.clustering, Clustering::singletons(4));
        assert_eq!(out.agreement, 3.0);
    }

    #[test]
    fn random_unit_graphs_against_brute_force() {
        let mut good = 0;
        let seeds = 6;
        for seed in 0..seeds {
            let s = random_unit(8, seed);
            let cfg = SdpConfig::new(0.4, seed);
            let out = solve_max_agree(&mut StreamSource::from_snapshot(&s), &cfg, None).unwrap();
            let (_, opt) = brute_force_opt(&s, Objective::MaxAgree, None).unwrap();
            let got = exact_agree(&s, &out.clustering) as f64;
            assert!(got >= s.total_abs_weight() as f64 / 2.0);
            if let Some(dev) = out.norm_deviation {
                assert!(dev < cfg.delta());
                assert!(out.min_edge_dot.unwrap() >= -cfg.delta());
            }
            if got >= 0.75 * opt as f64 {
                good += 1;
            }
        }
        assert!(good >= seeds - 1, "{good} of {seeds} within 0.75");
    }
}

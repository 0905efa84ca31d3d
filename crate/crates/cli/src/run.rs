//! `run`: one algorithm on one instance, producing a versioned JSON report.

use std::path::PathBuf;
use std::time::Instant;

use ccstream::graph::brute::{brute_force_opt_capped, DEFAULT_NODE_CAP};
use ccstream::multipass::{gg_min_disagree_k, pivot_loglog, GgkConfig, PivotConfig};
use ccstream::mwu::{min_disagree_solve, multicut_solve, SolverConfig};
use ccstream::sdp::{solve_max_agree, SdpConfig};
use ccstream::sketch::bilinear::{BilinearParams, BilinearSketch};
use ccstream::sketch::node_l1::{gg_min_disagree2, GgMin2Config};
use ccstream::sketch::repair::{cluster_repair, RepairConfig};
use ccstream::sparsify::gg_agree::{gg_max_agree_k, GgAgreeConfig};
use ccstream::trace::TraceWriter;
use ccstream::{brute_force_multicut, exact_agree, exact_disagree, Clustering, Error, GraphSnapshot, NodeId, Objective, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::instance::InstanceSpec;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    BilinearQuery,
    ClusterRepair,
    GgMaxagreeK,
    GgMindisagree2,
    Multicut,
    MindisagreeLp,
    MaxagreeSdp,
    PivotLoglog,
    GgMindisagreeK,
    BruteForce,
}

impl Algorithm {
    pub fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub eps: f64,
    pub delta: Option<f64>,
    pub k: Option<usize>,
    pub t: Option<usize>,
    pub seed: u64,
    pub instance: InstanceSpec,
    pub budget_edges: Option<usize>,
    pub budget_iters: Option<usize>,
    /// Sample size `r` for the sample-and-enumerate algorithms.
    pub sample_size: Option<usize>,
    /// Terminal pairs for multicut.
    pub pairs: Option<Vec<(NodeId, NodeId)>>,
    /// Query clustering for bilinear-query; defaults to the planted or gadget query clustering.
    pub clustering: Option<Vec<usize>>,
    /// Brute-force oracles run only up to this many nodes.
    pub oracle_cap: usize,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    MinDisagree,
    MaxAgree,
    Multicut,
    /// Sketch estimate of a fixed clustering's disagreement.
    Estimate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "relation", content = "threshold", rename_all = "kebab-case")]
pub enum Guarantee {
    AtMost(f64),
    AtLeast(f64),
    Within(f64, f64),
}

impl Guarantee {
    /// Distance to the nearest violated side; negative when the ratio breaks the guarantee.
    pub fn margin(&self, ratio: f64) -> f64 {
        match *self {
            Guarantee::AtMost(t) => t - ratio,
            Guarantee::AtLeast(t) => ratio - t,
            Guarantee::Within(lo, hi) => (ratio - lo).min(hi - ratio),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Refused,
    Malformed,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub algorithm: Algorithm,
    pub instance_digest: String,
    pub n: usize,
    pub updates: usize,
    pub status: Status,
    pub failure: Option<String>,
    pub measure: Option<Measure>,
    /// Exact objective of the output on the input graph.
    pub value: Option<f64>,
    /// The algorithm's own estimate of its objective.
    pub estimate: Option<f64>,
    pub oracle: Option<f64>,
    /// `value / oracle` (estimate over exact for bilinear-query); 1 when both are zero.
    pub ratio: Option<f64>,
    pub guarantee: Option<Guarantee>,
    pub passes: usize,
    pub pass_bound: Option<usize>,
    /// Counters, sketch entries and words of retained edges at peak.
    pub state_words: usize,
    pub wall_ms: f64,
    pub trace_path: Option<PathBuf>,
    pub clustering: Option<Vec<usize>>,
    /// Negative edges in the input, for the min-disagree LP bound.
    pub negative_edges: usize,
    pub details: serde_json::Value,
}

impl RunReport {
    pub fn within_guarantee(&self) -> Option<bool> {
        Some(self.guarantee?.margin(self.ratio?) >= -1e-9)
    }

    pub fn within_pass_bound(&self) -> Option<bool> {
        Some(self.passes <= self.pass_bound?)
    }
}

struct Produced {
    measure: Measure,
    clustering: Clustering,
    estimate: Option<f64>,
    /// Set when the exact value is not a clustering objective.
    value: Option<f64>,
    pass_bound: Option<usize>,
    state_words: usize,
    guarantee: Option<Guarantee>,
    oracle_k: Option<usize>,
    details: serde_json::Value,
}

fn details<T: Serialize>(outcome: &T) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(outcome)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("clustering");
    }
    Ok(v)
}

fn ratio(value: f64, oracle: f64) -> Option<f64> {
    if oracle == 0.0 {
        (value == 0.0).then_some(1.0)
    } else {
        Some(value / oracle)
    }
}

fn multicut_cost(s: &GraphSnapshot, regions: &[usize]) -> f64 {
    s.edges().filter(|e| regions[e.0] != regions[e.1]).map(|e| e.2 as f64).sum()
}

fn execute(cfg: &RunConfig, src: &mut ccstream::StreamSource, query: Option<Clustering>, trace: Option<&mut TraceWriter>) -> Result<Produced> {
    let n = src.n();
    let eps = cfg.eps;
    let delta = cfg.delta.unwrap_or(0.05);
    let k = cfg.k.unwrap_or(2);
    let produced = match cfg.algorithm {
        Algorithm::BilinearQuery => {
            let c = match &cfg.clustering {
                Some(labels) if labels.len() == n => Clustering::from_labels(labels),
                Some(labels) => return Err(Error::InvalidInput(format!("{} labels for n = {n}", labels.len()))),
                None => query.unwrap_or_else(|| Clustering::one_cluster(n)),
            };
            let sketch = BilinearSketch::from_stream(src, BilinearParams::new(eps, delta)?, cfg.seed)?;
            let est = sketch.query(&c);
            Produced {
                measure: Measure::Estimate,
                estimate: Some(est),
                value: None,
                pass_bound: Some(1),
                state_words: sketch.state_words(),
                guarantee: Some(Guarantee::Within(1.0 - eps, 1.0 + eps)),
                oracle_k: None,
                details: serde_json::json!({ "repetitions": sketch.repetitions() }),
                clustering: c,
            }
        }
        Algorithm::ClusterRepair => {
            let rc = RepairConfig { max_candidates: cfg.budget_edges.map_or(2_000_000, |b| b as u64), ..RepairConfig::new(cfg.t.unwrap_or(1), eps, delta, cfg.seed) };
            let out = cluster_repair(src, &rc)?;
            Produced {
                measure: Measure::MinDisagree,
                estimate: Some(out.estimate),
                value: None,
                pass_bound: Some(1),
                state_words: out.state_words,
                guarantee: Some(Guarantee::AtMost(1.0 + eps)),
                oracle_k: None,
                details: details(&out)?,
                clustering: out.clustering,
            }
        }
        Algorithm::GgMaxagreeK => {
            let gc = GgAgreeConfig { sample_size: cfg.sample_size, delta, ..GgAgreeConfig::new(k, eps, cfg.seed) };
            let out = gg_max_agree_k(src, &gc)?;
            Produced {
                measure: Measure::MaxAgree,
                estimate: Some(out.estimate),
                value: None,
                pass_bound: Some(1),
                state_words: out.state_words,
                guarantee: Some(Guarantee::AtLeast(1.0 - eps)),
                oracle_k: Some(k),
                details: details(&out)?,
                clustering: out.clustering,
            }
        }
        Algorithm::GgMindisagree2 => {
            let gc = GgMin2Config { sample_size: cfg.sample_size, delta, ..GgMin2Config::new(eps, cfg.seed) };
            let out = gg_min_disagree2(src, &gc)?;
            Produced {
                measure: Measure::MinDisagree,
                estimate: Some(out.estimate),
                value: None,
                pass_bound: Some(1),
                state_words: out.state_words,
                guarantee: Some(Guarantee::AtMost(1.0 + eps)),
                oracle_k: Some(2),
                details: details(&out)?,
                clustering: out.clustering,
            }
        }
        Algorithm::Multicut => {
            let pairs = cfg.pairs.clone().ok_or_else(|| Error::InvalidInput("multicut needs --pairs".into()))?;
            let sc = SolverConfig { delta: cfg.delta, max_iterations: cfg.budget_iters, ..SolverConfig::new(eps, cfg.seed) };
            let out = multicut_solve(src, &pairs, &sc, trace)?;
            let kappa = pairs.len() as f64;
            Produced {
                measure: Measure::Multicut,
                estimate: Some(out.cost),
                value: Some(multicut_cost(&src.oracle_snapshot(), &out.regions)),
                pass_bound: Some(1),
                state_words: 3 * out.sparsifier_edges + n,
                guarantee: Some(Guarantee::AtMost(3.0 * (1.0 + eps) * (kappa + 1.0).ln())),
                oracle_k: None,
                details: details(&out)?,
                clustering: Clustering::from_labels(&out.regions),
            }
        }
        Algorithm::MindisagreeLp => {
            let sc = SolverConfig { delta: cfg.delta, max_iterations: cfg.budget_iters, ..SolverConfig::new(eps, cfg.seed) };
            let out = min_disagree_solve(src, &sc, trace)?;
            let neg = src.oracle_snapshot().negative_edges().count() as f64;
            Produced {
                measure: Measure::MinDisagree,
                estimate: Some(out.cost),
                value: None,
                pass_bound: Some(1),
                state_words: 3 * out.peak_stored_edges + n,
                guarantee: Some(Guarantee::AtMost(3.0 * (1.0 + eps) * (neg + 1.0).ln())),
                oracle_k: None,
                details: details(&out)?,
                clustering: out.clustering,
            }
        }
        Algorithm::MaxagreeSdp => {
            let sc = SdpConfig { delta: cfg.delta, max_iterations: cfg.budget_iters, ..SdpConfig::new(eps, cfg.seed) };
            let out = solve_max_agree(src, &sc, trace)?;
            Produced {
                measure: Measure::MaxAgree,
                estimate: Some(out.agreement),
                value: None,
                pass_bound: Some(1),
                state_words: 3 * out.peak_stored_edges + n,
                guarantee: Some(Guarantee::AtLeast(0.75)),
                oracle_k: None,
                details: details(&out)?,
                clustering: out.clustering,
            }
        }
        Algorithm::PivotLoglog => {
            let pc = PivotConfig { budget_edges: cfg.budget_edges, ..PivotConfig::new(cfg.seed) };
            let out = pivot_loglog(src, &pc)?;
            if let Some(t) = trace {
                for w in &out.windows {
                    t.record(w)?;
                }
            }
            Produced {
                measure: Measure::MinDisagree,
                estimate: None,
                value: None,
                pass_bound: Some(out.pass_bound),
                state_words: 2 * out.peak_buffer + 2 * n,
                guarantee: None,
                oracle_k: None,
                details: details(&out)?,
                clustering: out.clustering,
            }
        }
        Algorithm::GgMindisagreeK => {
            let mut gc = GgkConfig { sample_size: cfg.sample_size, ..GgkConfig::new(cfg.k.unwrap_or(3), eps, cfg.seed) };
            if let Some(b) = cfg.budget_edges {
                gc.max_candidates = b as u64;
            }
            let out = gg_min_disagree_k(src, &gc)?;
            if let Some(t) = trace {
                for r in &out.rounds {
                    t.record(r)?;
                }
            }
            Produced {
                measure: Measure::MinDisagree,
                estimate: Some(out.estimate),
                value: None,
                pass_bound: Some(out.pass_bound),
                state_words: out.state_words,
                guarantee: Some(Guarantee::AtMost(1.0 + eps)),
                oracle_k: Some(gc.k),
                details: details(&out)?,
                clustering: out.clustering,
            }
        }
        Algorithm::BruteForce => {
            let s = src.snapshot();
            let (c, v) = brute_force_opt_capped(&s, Objective::MinDisagree, cfg.k, cfg.oracle_cap.max(DEFAULT_NODE_CAP))?;
            Produced {
                measure: Measure::MinDisagree,
                estimate: Some(v as f64),
                value: None,
                pass_bound: Some(1),
                state_words: 2 * s.num_edges() + n,
                guarantee: Some(Guarantee::Within(1.0, 1.0)),
                oracle_k: cfg.k,
                details: serde_json::Value::Null,
                clustering: c,
            }
        }
    };
    Ok(produced)
}

fn failed_report(cfg: &RunConfig, err: &Error) -> RunReport {
    let status = if err.is_refusal() {
        Status::Refused
    } else if err.is_malformed_input() || matches!(err, Error::UnsupportedWeightClass(_)) {
        Status::Malformed
    } else {
        Status::Failed
    };
    RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.clone(),
        algorithm: cfg.algorithm,
        instance_digest: String::new(),
        n: 0,
        updates: 0,
        status,
        failure: Some(err.to_string()),
        measure: None,
        value: None,
        estimate: None,
        oracle: None,
        ratio: None,
        guarantee: None,
        passes: 0,
        pass_bound: None,
        state_words: 0,
        wall_ms: 0.0,
        trace_path: None,
        clustering: None,
        negative_edges: 0,
        details: serde_json::Value::Null,
    }
}

/// Runs the configured algorithm. Errors become reports with a failure status; the
/// returned error, if any, is the one that should set the exit code.
pub fn run(cfg: &RunConfig) -> (RunReport, Option<Error>) {
    let start = Instant::now();
    let loaded = match cfg.instance.load() {
        Ok(l) => l,
        Err(e) => return (failed_report(cfg, &e), Some(e)),
    };
    let mut src = loaded.source;
    let mut report = failed_report(cfg, &Error::InvalidInput(String::new()));
    report.instance_digest = loaded.digest;
    report.n = src.n();
    report.updates = src.len();
    let snap = src.oracle_snapshot();
    report.negative_edges = snap.negative_edges().count();

    let mut trace = match cfg.trace.as_deref().map(TraceWriter::create).transpose() {
        Ok(t) => t,
        Err(e) => {
            report.status = Status::Failed;
            report.failure = Some(e.to_string());
            return (report, Some(e));
        }
    };
    let query = loaded.query.or(loaded.planted);
    let produced = execute(cfg, &mut src, query, trace.as_mut());
    if let Some(t) = trace.as_mut() {
        let _ = t.flush();
    }
    report.passes = src.passes();
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let p = match produced {
        Ok(p) => p,
        Err(e) => {
            let failed = failed_report(cfg, &e);
            report.status = failed.status;
            report.failure = failed.failure;
            return (report, Some(e));
        }
    };
    report.status = Status::Ok;
    report.failure = None;
    report.trace_path = cfg.trace.clone();
    report.measure = Some(p.measure);
    report.estimate = p.estimate;
    report.pass_bound = p.pass_bound;
    report.state_words = p.state_words;
    report.guarantee = p.guarantee;
    report.details = p.details;
    report.clustering = Some(p.clustering.labels().to_vec());

    let c = &p.clustering;
    let small = snap.n <= cfg.oracle_cap;
    match p.measure {
        Measure::Estimate => {
            let exact = exact_disagree(&snap, c) as f64;
            report.value = p.estimate;
            report.oracle = Some(exact);
            report.ratio = ratio(p.estimate.unwrap_or(0.0), exact);
        }
        Measure::Multicut => {
            report.value = p.value;
            let pairs = cfg.pairs.as_deref().unwrap_or(&[]);
            if let Ok((_, opt)) = brute_force_multicut(&snap, pairs) {
                report.oracle = Some(opt as f64);
                report.ratio = ratio(p.value.unwrap_or(0.0), opt as f64);
            }
        }
        Measure::MinDisagree | Measure::MaxAgree => {
            let (value, objective) = if p.measure == Measure::MinDisagree {
                (exact_disagree(&snap, c) as f64, Objective::MinDisagree)
            } else {
                (exact_agree(&snap, c) as f64, Objective::MaxAgree)
            };
            report.value = Some(value);
            if small && cfg.algorithm != Algorithm::BruteForce {
                if let Ok((_, opt)) = brute_force_opt_capped(&snap, objective, p.oracle_k, cfg.oracle_cap) {
                    report.oracle = Some(opt as f64);
                    report.ratio = ratio(value, opt as f64);
                }
            } else if cfg.algorithm == Algorithm::BruteForce {
                report.oracle = Some(value);
                report.ratio = Some(1.0);
            }
        }
    }
    (report, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ccstream::InstanceKind;

    fn config(algorithm: Algorithm, kind: InstanceKind, n: usize) -> RunConfig {
        RunConfig {
            algorithm,
            eps: 0.3,
            delta: None,
            k: None,
            t: None,
            seed: 7,
            instance: InstanceSpec::Gen { kind, n, seed: 7, churn: 0 },
            budget_edges: None,
            budget_iters: None,
            sample_size: None,
            pairs: None,
            clustering: None,
            oracle_cap: 12,
            out: None,
            trace: None,
        }
    }

    #[test]
    fn pivot_on_a_clean_planting_is_exact() {
        let (r, err) = run(&config(Algorithm::PivotLoglog, InstanceKind::Planted { k: 2, flip: 0.0 }, 10));
        assert!(err.is_none());
        assert_eq!(r.value, Some(0.0));
        assert_eq!(r.oracle, Some(0.0));
        assert_eq!(r.ratio, Some(1.0));
        assert!(r.within_pass_bound().unwrap());
    }

    #[test]
    fn reports_are_reproducible() {
        let cfg = config(Algorithm::GgMindisagreeK, InstanceKind::Planted { k: 3, flip: 0.1 }, 12);
        let cfg = RunConfig { k: Some(3), sample_size: Some(6), ..cfg };
        let (mut a, _) = run(&cfg);
        let (mut b, _) = run(&cfg);
        a.wall_ms = 0.0;
        b.wall_ms = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn brute_force_above_the_cap_refuses() {
        let cfg = RunConfig { oracle_cap: 0, ..config(Algorithm::BruteForce, InstanceKind::Path, 20) };
        let (r, err) = run(&cfg);
        assert!(err.unwrap().is_refusal());
        assert_eq!(r.status, Status::Refused);
    }

    #[test]
    fn guarantee_margins() {
        assert!((Guarantee::AtMost(1.3).margin(1.0) - 0.3).abs() < 1e-12);
        assert!(Guarantee::AtLeast(0.75).margin(0.5) < 0.0);
        assert!((Guarantee::Within(0.9, 1.1).margin(1.05) - 0.05).abs() < 1e-12);
    }
}

//! Single-pass multicut by region growing inside the dual-primal loop.

use serde::Serialize;

use super::engine::{iteration_bound, oracle_from_rounding, run_dual_primal, MwuState, Rounding, Violated};
use super::region::{path_in_ball, region_grow, LengthEdge};
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::graph::stream::StreamSource;
use crate::graph::NodeId;
use crate::sparsify::{SparsifierBuilder, SparsifyConfig};
use crate::trace::TraceWriter;
use crate::union_find::UnionFind;

#[derive(Clone, Debug, Serialize)]
pub struct MulticutOutcome {
    /// Region of each node: one per ball, plus one shared by all nodes outside every ball.
    pub regions: Vec<usize>,
    /// Sparsifier edges whose endpoints lie in different regions.
    pub cut: Vec<(NodeId, NodeId, f64)>,
    pub cost: f64,
    pub alpha0: Option<f64>,
    pub final_alpha: Option<f64>,
    pub alpha_decreases: usize,
    pub iterations: usize,
    pub iteration_bound: usize,
    pub audits: usize,
    pub max_violation: Option<f64>,
    pub converged_early: bool,
    pub sparsifier_edges: usize,
    /// No primal was seen at the final guess and every edge was cut.
    pub trivial_fallback: bool,
}

/// `ceil(log2 w)`, the scale `z` with `w in (2^(z-1), 2^z]`.
pub(crate) fn weight_scale(w: f64) -> i32 {
    let z = w.log2().ceil() as i32;
    // guard against rounding at exact powers of two
    if 2f64.powi(z - 1) >= w {
        z - 1
    } else {
        z
    }
}

pub fn multicut_solve(
    src: &mut StreamSource,
    pairs: &[(NodeId, NodeId)],
    cfg: &SolverConfig,
    trace: Option<&mut TraceWriter>,
) -> Result<MulticutOutcome> {
    let n = src.n();
    for &(s, t) in pairs {
        if s >= n || t >= n {
            return Err(Error::InvalidInput(format!("pair ({s}, {t}) out of range for n = {n}")));
        }
        if s == t {
            return Err(Error::InvalidInput(format!("pair ({s}, {t}) has s = t")));
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("multicut needs at least one pair".into()));
    }
    let delta = cfg.delta();
    // cuts preserved within 1 +- delta
    let scfg = SparsifyConfig { eps: (6.0 * delta).min(1.0), seed: cfg.seed, oversample: cfg.oversample, chunk: None };
    let mut builder = SparsifierBuilder::new(n, &scfg, src.is_insert_only())?;
    let mut bad = None;
    for e in src.pass() {
        if e.weight <= 0 {
            bad.get_or_insert(e);
            continue;
        }
        builder.push(&e);
    }
    if let Some(e) = bad {
        return Err(Error::InvalidInput(format!("multicut needs positive weights, got {} on ({}, {})", e.weight, e.u, e.v)));
    }
    let mut edges = builder.finish().plus.edges;
    edges.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let m = edges.len();

    // largest weight scale whose addition connects some pair
    let mut uf = UnionFind::new(n);
    let mut first_scale = None;
    let mut i = 0;
    while i < m {
        let z = weight_scale(edges[i].2);
        while i < m && weight_scale(edges[i].2) == z {
            uf.union(edges[i].0, edges[i].1);
            i += 1;
        }
        if pairs.iter().any(|&(s, t)| uf.find(s) == uf.find(t)) {
            first_scale = Some(z);
            break;
        }
    }
    let Some(z0) = first_scale else {
        let mut uf = UnionFind::new(n);
        for e in &edges {
            uf.union(e.0, e.1);
        }
        return Ok(MulticutOutcome {
            regions: uf.labels(),
            cut: Vec::new(),
            cost: 0.0,
            alpha0: None,
            final_alpha: None,
            alpha_decreases: 0,
            iterations: 0,
            iteration_bound: 0,
            audits: 0,
            max_violation: None,
            converged_early: false,
            sparsifier_edges: m,
            trivial_fallback: false,
        });
    };
    let alpha0 = (1.0 + 4.0 * delta) * 2f64.powi(z0) * (n * n) as f64;

    let rho = m as f64 / delta;
    let mut st = MwuState::new(delta, rho, 1.0)?;
    let t_bound = cfg.max_iterations.unwrap_or_else(|| iteration_bound(rho, 1.0, delta, m));
    let kappa = pairs.len();
    let mut active = 0;
    let activate = |alpha: f64, st: &mut MwuState| {
        while active < m && edges[active].2 >= delta * alpha / m as f64 {
            st.add_row(1.0);
            active += 1;
        }
    };
    let oracle = |st: &MwuState, alpha: f64| {
        let rows = st.rows();
        oracle_from_rounding(st.multipliers(), st.b(), alpha, |x| {
            let len: Vec<LengthEdge> = edges[..rows]
                .iter()
                .zip(x)
                .map(|(&(u, v, w), &xi)| LengthEdge { u, v, w, x: xi / w })
                .collect();
            let terminals: Vec<NodeId> = pairs.iter().map(|p| p.0).collect();
            let d = region_grow(n, &len, &terminals, kappa);
            for &(s, t) in pairs {
                if let Some((path, _)) = path_in_ball(n, &len, &d, s, t) {
                    let column = path.iter().map(|&ei| (ei, 1.0 / len[ei].w)).collect();
                    return Rounding::Violated(vec![Violated { c: 1.0, column }]);
                }
            }
            let outside = d.balls.len();
            Rounding::Primal(d.owner.iter().map(|o| o.unwrap_or(outside)).collect::<Vec<usize>>())
        })
    };
    let report = run_dual_primal(&mut st, alpha0, t_bound, activate, oracle, trace)?;
    let (regions, trivial_fallback) = match report.primal {
        Some((r, _)) => (r, false),
        None => {
            log::warn!("no primal solution at the final guess; cutting every edge");
            ((0..n).collect(), true)
        }
    };
    let cut: Vec<_> = edges.iter().copied().filter(|e| regions[e.0] != regions[e.1]).collect();
    let cost = cut.iter().map(|e| e.2).sum();
    Ok(MulticutOutcome {
        regions,
        cut,
        cost,
        alpha0: Some(alpha0),
        final_alpha: Some(report.final_alpha),
        alpha_decreases: report.alpha_decreases,
        iterations: report.iterations,
        iteration_bound: t_bound,
        audits: report.audits,
        max_violation: Some(report.max_violation),
        converged_early: report.converged_early,
        sparsifier_edges: m,
        trivial_fallback,
    })
}

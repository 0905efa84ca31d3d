//! Min-disagree for arbitrary weights: a path LP over a sparsified positive side and the
//! exact negative side, solved by the dual-primal loop with a region-growing oracle.
//!
//! Primal: minimize `sum_{E-} |w| z_ij + sum_{H+} w x_sq` subject to
//! `z_ij + sum_{sq in p} x_sq >= 1` for every `ij in E-` and every `H+` path `p` from `i` to `j`.

use std::cell::RefCell;
use std::collections::BTreeMap;

use serde::Serialize;

use super::engine::{iteration_bound, oracle_from_rounding, run_dual_primal, MwuState, Rounding, Violated};
use super::multicut::weight_scale;
use super::region::{path_in_ball, region_grow, LengthEdge};
use super::SolverConfig;
use crate::error::Result;
use crate::graph::eval::disagree_of;
use crate::graph::stream::StreamSource;
use crate::graph::{Clustering, NodeId};
use crate::sparsify::{SparsifierBuilder, SparsifyConfig};
use crate::trace::TraceWriter;
use crate::union_find::UnionFind;

#[derive(Clone, Debug, Serialize)]
pub struct MinDisagreeOutcome {
    pub clustering: Clustering,
    /// Disagreement of `clustering` on `H+` together with `E-`.
    pub cost: f64,
    pub alpha0: Option<f64>,
    pub final_alpha: Option<f64>,
    pub alpha_decreases: usize,
    pub iterations: usize,
    pub iteration_bound: usize,
    pub audits: usize,
    pub max_violation: Option<f64>,
    pub converged_early: bool,
    pub positive_edges: usize,
    pub negative_edges: usize,
    /// Peak number of edges held during the pass.
    pub peak_stored_edges: usize,
    pub trivial_fallback: bool,
}

enum Row {
    Plus(usize),
    Minus(usize),
}

/// Largest scale `z` such that some negative edge of weight at least `2^z` has its endpoints
/// joined by positive edges of scale `z` or more. `None` when no negative edge is ever joined.
fn top_scale(n: usize, plus: &[(NodeId, NodeId, f64)], minus: &[(NodeId, NodeId, f64)]) -> Option<i32> {
    let mut uf = UnionFind::new(n);
    let joined = |uf: &mut UnionFind| {
        minus.iter().filter(|e| uf.find(e.0) == uf.find(e.1)).map(|e| e.2).fold(0.0, f64::max)
    };
    let (Some(first), Some(last)) = (plus.first(), plus.last()) else {
        return None;
    };
    let (zmax, zmin) = (weight_scale(first.2), weight_scale(last.2));
    let mut i = 0;
    let mut g = 0.0;
    for z in (zmin..=zmax).rev() {
        while i < plus.len() && weight_scale(plus[i].2) >= z {
            uf.union(plus[i].0, plus[i].1);
            i += 1;
        }
        g = joined(&mut uf);
        if g >= 2f64.powi(z) {
            return Some(z);
        }
    }
    (g > 0.0).then(|| (zmin - 1).min(g.log2().floor() as i32))
}

fn components(n: usize, plus: &[(NodeId, NodeId, f64)]) -> Clustering {
    let mut uf = UnionFind::new(n);
    for e in plus {
        uf.union(e.0, e.1);
    }
    Clustering::from_labels(&uf.labels())
}

pub fn min_disagree_solve(
    src: &mut StreamSource,
    cfg: &SolverConfig,
    trace: Option<&mut TraceWriter>,
) -> Result<MinDisagreeOutcome> {
    let n = src.n();
    let delta = cfg.delta();
    let scfg = SparsifyConfig { eps: cfg.eps.min(1.0), seed: cfg.seed, oversample: cfg.oversample, chunk: None };
    let mut builder = SparsifierBuilder::new(n, &scfg, src.is_insert_only())?;
    let mut neg: BTreeMap<(NodeId, NodeId), i64> = BTreeMap::new();
    let mut peak_neg = 0;
    for e in src.pass() {
        if e.weight > 0 {
            builder.push(&e);
        } else {
            let k = e.key();
            *neg.entry(k).or_insert(0) += e.signed_weight();
            if neg[&k] == 0 {
                neg.remove(&k);
            }
            peak_neg = peak_neg.max(neg.len());
        }
    }
    let sp = builder.finish();
    let mut plus = sp.plus.edges;
    let mut minus: Vec<(NodeId, NodeId, f64)> = neg.iter().map(|(&(u, v), &w)| (u, v, (-w) as f64)).collect();
    let by_weight = |a: &(NodeId, NodeId, f64), b: &(NodeId, NodeId, f64)| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1)));
    plus.sort_by(by_weight);
    minus.sort_by(by_weight);
    let (mp, mm) = (plus.len(), minus.len());
    let signed = || plus.iter().copied().chain(minus.iter().map(|&(u, v, w)| (u, v, -w)));

    let mut out = MinDisagreeOutcome {
        clustering: components(n, &plus),
        cost: 0.0,
        alpha0: None,
        final_alpha: None,
        alpha_decreases: 0,
        iterations: 0,
        iteration_bound: 0,
        audits: 0,
        max_violation: None,
        converged_early: false,
        positive_edges: mp,
        negative_edges: mm,
        peak_stored_edges: sp.peak_stored_edges + peak_neg,
        trivial_fallback: false,
    };
    let Some(z0) = top_scale(n, &plus, &minus) else {
        // no negative edge inside a positive component: zero disagreement
        out.cost = disagree_of(signed(), &out.clustering);
        return Ok(out);
    };
    let alpha0 = (1.0 + 4.0 * delta) * 2f64.powi(z0 + 1) * (n * n) as f64;

    let total = (mp + mm) as f64;
    let rho = total / delta;
    let mut st = MwuState::new(delta, rho, 1.0)?;
    let t_bound = cfg.max_iterations.unwrap_or_else(|| iteration_bound(rho, 1.0, delta, mp + mm));
    let kappa = mm;
    // row id -> edge, filled in activation order
    let rows: RefCell<Vec<Row>> = RefCell::new(Vec::new());
    let minus_row: RefCell<Vec<usize>> = RefCell::new(vec![usize::MAX; mm]);
    let (mut ap, mut am) = (0, 0);
    let activate = |alpha: f64, st: &mut MwuState| {
        let theta = delta * alpha / total;
        let mut rows = rows.borrow_mut();
        while ap < mp && plus[ap].2 >= theta {
            st.add_row(1.0);
            rows.push(Row::Plus(ap));
            ap += 1;
        }
        while am < mm && minus[am].2 >= theta {
            minus_row.borrow_mut()[am] = st.add_row(1.0);
            rows.push(Row::Minus(am));
            am += 1;
        }
    };
    let oracle = |st: &MwuState, alpha: f64| {
        let rows = rows.borrow();
        let minus_row = minus_row.borrow();
        oracle_from_rounding(st.multipliers(), st.b(), alpha, |x| {
            let mut len: Vec<LengthEdge> = Vec::new();
            let mut len_row: Vec<usize> = Vec::new();
            let mut negs: Vec<(usize, f64)> = Vec::new();
            for (r, &xr) in x.iter().enumerate() {
                match rows[r] {
                    Row::Plus(i) => {
                        let (u, v, w) = plus[i];
                        len.push(LengthEdge { u, v, w, x: xr / w });
                        len_row.push(r);
                    }
                    Row::Minus(j) => negs.push((j, xr / minus[j].2)),
                }
            }
            negs.sort_unstable_by_key(|e| e.0);
            let terminals: Vec<NodeId> = negs.iter().flat_map(|&(j, _)| [minus[j].0, minus[j].1]).collect();
            let d = region_grow(n, &len, &terminals, kappa);
            for &(j, z) in &negs {
                let (a, b, w) = minus[j];
                if z >= 1.0 / 3.0 {
                    continue;
                }
                if let Some((path, _)) = path_in_ball(n, &len, &d, a, b) {
                    let mut column: Vec<(usize, f64)> = path.iter().map(|&ei| (len_row[ei], 1.0 / len[ei].w)).collect();
                    column.push((minus_row[j], 1.0 / w));
                    return Rounding::Violated(vec![Violated { c: 1.0, column }]);
                }
            }
            // balls become clusters; the rest split by positive connectivity
            let mut uf = UnionFind::new(n);
            for e in &plus {
                if d.owner[e.0].is_none() && d.owner[e.1].is_none() {
                    uf.union(e.0, e.1);
                }
            }
            let nb = d.balls.len();
            let labels: Vec<usize> = (0..n).map(|v| d.owner[v].unwrap_or_else(|| nb + uf.find(v))).collect();
            Rounding::Primal(Clustering::from_labels(&labels))
        })
    };
    let report = run_dual_primal(&mut st, alpha0, t_bound, activate, oracle, trace)?;
    match report.primal {
        Some((c, _)) => out.clustering = c,
        None => {
            log::warn!("no primal solution at the final guess; returning singletons");
            out.clustering = Clustering::singletons(n);
            out.trivial_fallback = true;
        }
    }
    out.cost = disagree_of(signed(), &out.clustering);
    out.alpha0 = Some(alpha0);
    out.final_alpha = Some(report.final_alpha);
    out.alpha_decreases = report.alpha_decreases;
    out.iterations = report.iterations;
    out.iteration_bound = t_bound;
    out.audits = report.audits;
    out.max_violation = Some(report.max_violation);
    out.converged_early = report.converged_early;
    Ok(out)
}

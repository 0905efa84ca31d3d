//! Multiplicative weights for the decision problem `c^T y >= alpha, A y <= b, y >= 0`.
//!
//! One multiplier per row of `A`. Each oracle candidate `y'` is audited against the three
//! admissibility conditions before the update `u_i <- (1 + delta (A_i y' - b_i) / rho) u_i`.
//! Rows may be added between steps; a row added after `t` steps starts at the value it would
//! have reached had it been present and idle throughout, `(1 - delta b_i / rho)^t`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::trace::{emit, TraceWriter};

const TOL: f64 = 1e-9;

/// A dual candidate described by its effect on the rows: `A_i y'` for every row it touches
/// (untouched rows have `A_i y' = 0`) and its value `c^T y'`.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCandidate {
    pub loads: Vec<(usize, f64)>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OracleOutcome<P> {
    Dual(DualCandidate),
    Primal(P),
}

/// A primal constraint found violated by a rounding procedure: its right-hand side `c_j` and
/// the column `A_{.j}` of the dual variable it corresponds to.
#[derive(Clone, Debug, PartialEq)]
pub struct Violated {
    pub c: f64,
    pub column: Vec<(usize, f64)>,
}

pub enum Rounding<P> {
    Violated(Vec<Violated>),
    Primal(P),
}

/// Turns a rounding procedure into an oracle. The rounding receives the scaled primal
/// `x_i = alpha u_i / sum_i b_i u_i`; if it reports violated constraints `S` the candidate puts
/// `alpha / sum_{j in S} c_j` on each of them, so `c^T y = alpha`.
pub fn oracle_from_rounding<P, R>(u: &[f64], b: &[f64], alpha: f64, round: R) -> OracleOutcome<P>
where
    R: FnOnce(&[f64]) -> Rounding<P>,
{
    let scale: f64 = u.iter().zip(b).map(|(u, b)| u * b).sum();
    assert!(scale > 0.0, "oracle called with zero multiplier mass");
    let x: Vec<f64> = u.iter().map(|ui| alpha * ui / scale).collect();
    match round(&x) {
        Rounding::Primal(p) => OracleOutcome::Primal(p),
        Rounding::Violated(set) => {
            assert!(!set.is_empty(), "rounding reported an empty violated set");
            assert!(set.iter().all(|v| v.c > 0.0), "violated constraints need c_j > 0");
            let delta_c: f64 = set.iter().map(|v| v.c).sum();
            let y = alpha / delta_c;
            let mut loads: Vec<(usize, f64)> = Vec::new();
            for v in &set {
                for &(i, a) in &v.column {
                    loads.push((i, a * y));
                }
            }
            loads.sort_unstable_by_key(|l| l.0);
            loads.dedup_by(|next, prev| {
                if next.0 == prev.0 {
                    prev.1 += next.1;
                    true
                } else {
                    false
                }
            });
            OracleOutcome::Dual(DualCandidate { loads, value: delta_c * y })
        }
    }
}

/// `T = ceil(2 rho ell delta^-2 ln M)`.
pub fn iteration_bound(rho: f64, ell: f64, delta: f64, rows: usize) -> usize {
    let m = rows.max(2) as f64;
    (2.0 * rho * ell * m.ln() / (delta * delta)).ceil() as usize
}

#[derive(Clone, Debug)]
pub struct MwuState {
    delta: f64,
    rho: f64,
    ell: f64,
    b: Vec<f64>,
    // multipliers up to a common factor exp(-log_norm)
    u: Vec<f64>,
    log_norm: f64,
    load_sum: Vec<f64>,
    value_sum: f64,
    t: usize,
    audits: usize,
}

impl MwuState {
    pub fn new(delta: f64, rho: f64, ell: f64) -> Result<Self> {
        if !(delta > 0.0 && delta <= 0.5) {
            return Err(Error::InvalidInput(format!("mwu needs 0 < delta <= 1/2, got {delta}")));
        }
        if !(ell > 0.0 && ell <= rho) {
            return Err(Error::InvalidInput(format!("mwu needs 0 < ell <= rho, got ell={ell} rho={rho}")));
        }
        Ok(MwuState {
            delta,
            rho,
            ell,
            b: Vec::new(),
            u: Vec::new(),
            log_norm: 0.0,
            load_sum: Vec::new(),
            value_sum: 0.0,
            t: 0,
            audits: 0,
        })
    }

    /// Registers a row with right-hand side `b > 0` and returns its index.
    pub fn add_row(&mut self, b: f64) -> usize {
        assert!(b > 0.0, "rows need b_i > 0");
        let idle = (1.0 - self.delta * b / self.rho).ln();
        self.u.push((self.t as f64 * idle + self.log_norm).exp());
        self.b.push(b);
        self.load_sum.push(0.0);
        self.u.len() - 1
    }

    pub fn rows(&self) -> usize {
        self.u.len()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    /// Dual candidates applied so far.
    pub fn iterations(&self) -> usize {
        self.t
    }

    pub fn audits(&self) -> usize {
        self.audits
    }

    /// Multipliers, proportional to the true `u(t)`.
    pub fn multipliers(&self) -> &[f64] {
        &self.u
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn sum_u(&self) -> f64 {
        self.u.iter().sum()
    }

    /// Audits `cand` against the admissibility conditions for `alpha` and applies the update.
    pub fn step(&mut self, alpha: f64, cand: &DualCandidate) -> Result<()> {
        let iteration = self.t + 1;
        let m = self.u.len();
        if cand.value < alpha * (1.0 - TOL) {
            return Err(Error::Admissibility {
                iteration,
                detail: format!("(i) c^T y = {} below alpha = {alpha}", cand.value),
            });
        }
        let mut a = vec![0.0; m];
        for &(i, l) in &cand.loads {
            if i >= m {
                return Err(Error::Admissibility { iteration, detail: format!("candidate touches unknown row {i}") });
            }
            if l < 0.0 {
                return Err(Error::Admissibility { iteration, detail: format!("negative load {l} on row {i}") });
            }
            a[i] += l;
        }
        let mut lhs = 0.0;
        let mut sum_u = 0.0;
        for i in 0..m {
            let r = a[i] - self.b[i];
            if r > self.rho * (1.0 + TOL) || r < -self.ell * (1.0 + TOL) {
                return Err(Error::WidthViolation { iteration, excess: r.abs(), rho: self.rho });
            }
            lhs += self.u[i] * r;
            sum_u += self.u[i];
        }
        if lhs > self.delta * sum_u + TOL * sum_u {
            return Err(Error::Admissibility {
                iteration,
                detail: format!("(ii) u^T(Ay - b) = {lhs} exceeds delta sum u = {}", self.delta * sum_u),
            });
        }
        self.audits += 1;
        let mut total = 0.0;
        for i in 0..m {
            self.u[i] *= 1.0 + self.delta * (a[i] - self.b[i]) / self.rho;
            self.load_sum[i] += a[i];
            total += self.u[i];
        }
        self.value_sum += cand.value;
        self.t += 1;
        if total < 1e-150 || total > 1e150 {
            let f = 1.0 / total;
            for x in &mut self.u {
                *x *= f;
            }
            self.log_norm += f.ln();
        }
        Ok(())
    }

    /// `max_i (A_i ybar - b_i)` for the average `ybar` of all applied candidates.
    pub fn max_violation(&self) -> f64 {
        if self.t == 0 {
            return f64::INFINITY;
        }
        let t = self.t as f64;
        self.load_sum
            .iter()
            .zip(&self.b)
            .map(|(s, b)| s / t - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `A ybar` row by row.
    pub fn averaged_loads(&self) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.load_sum.iter().map(|s| s / t).collect()
    }

    pub fn averaged_value(&self) -> f64 {
        self.value_sum / self.t.max(1) as f64
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationRecord {
    pub t: usize,
    pub alpha: f64,
    pub outcome: &'static str,
    pub max_violation: Option<f64>,
    pub sum_u: f64,
}

/// Summary of a dual-primal run.
#[derive(Clone, Debug, Serialize)]
pub struct DualPrimalReport<P> {
    /// Last primal found and the guess it was found at.
    pub primal: Option<(P, f64)>,
    pub alpha0: f64,
    pub final_alpha: f64,
    pub alpha_decreases: usize,
    pub iterations: usize,
    pub iteration_bound: usize,
    pub oracle_calls: usize,
    pub audits: usize,
    /// Averaged violation certified at or below `4 delta` before `T` steps.
    pub converged_early: bool,
    pub max_violation: f64,
}

/// Drives the dual-primal loop: a primal answer shrinks `alpha` by `1 + delta`, a dual answer
/// is applied to the multipliers. Stops once the averaged dual is within `4 delta` of
/// feasibility or after `t_bound` dual steps. `activate` registers the rows admitted at the
/// current `alpha` and returns the new row count used for the bound.
pub fn run_dual_primal<P, A, O>(
    st: &mut MwuState,
    alpha0: f64,
    t_bound: usize,
    mut activate: A,
    mut oracle: O,
    mut trace: Option<&mut TraceWriter>,
) -> Result<DualPrimalReport<P>>
where
    A: FnMut(f64, &mut MwuState),
    O: FnMut(&MwuState, f64) -> OracleOutcome<P>,
{
    let delta = st.delta();
    // alpha can fall at most this far before something is wrong with the instance
    let max_decreases = ((1e12f64).ln() / (1.0 + delta).ln()).ceil() as usize;
    let mut alpha = alpha0;
    let mut primal = None;
    let (mut decreases, mut calls) = (0, 0);
    activate(alpha, st);
    let converged_early = loop {
        calls += 1;
        match oracle(st, alpha) {
            OracleOutcome::Primal(p) => {
                emit(
                    &mut trace,
                    &IterationRecord { t: st.iterations(), alpha, outcome: "primal", max_violation: None, sum_u: st.sum_u() },
                )?;
                primal = Some((p, alpha));
                alpha /= 1.0 + delta;
                decreases += 1;
                if decreases > max_decreases {
                    return Err(Error::Refused(format!(
                        "alpha decreased {decreases} times from {alpha0} without a dual certificate"
                    )));
                }
                activate(alpha, st);
            }
            OracleOutcome::Dual(c) => {
                st.step(alpha, &c)?;
                let mv = st.max_violation();
                emit(
                    &mut trace,
                    &IterationRecord { t: st.iterations(), alpha, outcome: "dual", max_violation: Some(mv), sum_u: st.sum_u() },
                )?;
                if mv <= 4.0 * delta {
                    break st.iterations() < t_bound;
                }
                if st.iterations() >= t_bound {
                    return Err(Error::Admissibility {
                        iteration: st.iterations(),
                        detail: format!("averaged violation {mv} exceeds 4 delta = {} after T steps", 4.0 * delta),
                    });
                }
            }
        }
    };
    Ok(DualPrimalReport {
        primal,
        alpha0,
        final_alpha: alpha,
        alpha_decreases: decreases,
        iterations: st.iterations(),
        iteration_bound: t_bound,
        oracle_calls: calls,
        audits: st.audits(),
        converged_early,
        max_violation: st.max_violation(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // y_1 <= 1, y_2 <= 1, y_1 + y_2 >= alpha: the oracle puts all mass on the row with the
    // smaller multiplier, which is admissible whenever alpha <= 2.
    fn toy_oracle(st: &MwuState, alpha: f64) -> OracleOutcome<()> {
        let u = st.multipliers();
        let j = if u[0] <= u[1] { 0 } else { 1 };
        OracleOutcome::Dual(DualCandidate { loads: vec![(j, alpha)], value: alpha })
    }

    #[test]
    fn toy_lp_converges_within_four_delta() {
        let (delta, rho, alpha) = (0.1, 1.0, 1.5);
        let mut st = MwuState::new(delta, rho, 1.0).unwrap();
        st.add_row(1.0);
        st.add_row(1.0);
        let t = iteration_bound(rho, 1.0, delta, 2);
        let mut ys = [0.0f64; 2];
        for _ in 0..t {
            let OracleOutcome::Dual(c) = toy_oracle(&st, alpha) else { unreachable!() };
            for &(j, l) in &c.loads {
                ys[j] += l;
            }
            st.step(alpha, &c).unwrap();
        }
        // direct check of the averaged y against the LP rows
        for y in ys {
            assert!(y / t as f64 - 1.0 <= 4.0 * delta);
        }
        assert!(st.max_violation() <= 4.0 * delta);
        assert!((st.averaged_value() - alpha).abs() < 1e-12);
    }

    #[test]
    fn width_violation_is_an_error() {
        let mut st = MwuState::new(0.1, 2.0, 1.0).unwrap();
        st.add_row(1.0);
        let c = DualCandidate { loads: vec![(0, 1.0 + 3.0)], value: 1.0 };
        match st.step(1.0, &c) {
            Err(Error::WidthViolation { excess, rho, .. }) => {
                assert_eq!(excess, 3.0);
                assert_eq!(rho, 2.0);
            }
            other => panic!("expected width violation, got {other:?}"),
        }
    }

    #[test]
    fn value_below_alpha_is_rejected() {
        let mut st = MwuState::new(0.1, 2.0, 1.0).unwrap();
        st.add_row(1.0);
        let c = DualCandidate { loads: vec![(0, 0.5)], value: 0.5 };
        assert!(matches!(st.step(1.0, &c), Err(Error::Admissibility { .. })));
    }

    #[test]
    fn weighted_feasibility_is_audited() {
        let mut st = MwuState::new(0.1, 10.0, 1.0).unwrap();
        st.add_row(1.0);
        st.add_row(1.0);
        // u^T(Ay - b) = 4 - 1 = 3 > 0.2
        let c = DualCandidate { loads: vec![(0, 5.0)], value: 5.0 };
        assert!(matches!(st.step(1.0, &c), Err(Error::Admissibility { .. })));
    }

    #[test]
    fn multipliers_move_only_off_balance() {
        let mut st = MwuState::new(0.2, 4.0, 1.0).unwrap();
        for _ in 0..3 {
            st.add_row(1.0);
        }
        let c = DualCandidate { loads: vec![(0, 1.0), (1, 2.0)], value: 1.0 };
        st.step(1.0, &c).unwrap();
        let u = st.multipliers();
        assert_eq!(u[0], 1.0);
        assert!((u[1] - 1.05).abs() < 1e-12);
        assert!((u[2] - 0.95).abs() < 1e-12);
    }

    #[test]
    fn late_rows_start_at_idle_value() {
        let (delta, rho) = (0.25, 5.0);
        let mut st = MwuState::new(delta, rho, 1.0).unwrap();
        st.add_row(1.0);
        st.add_row(1.0);
        for _ in 0..7 {
            st.step(1.0, &DualCandidate { loads: vec![(0, 1.0)], value: 1.0 }).unwrap();
        }
        let late = st.add_row(1.0);
        // row 1 was idle throughout, so the new row must match it exactly
        let u = st.multipliers();
        assert!((u[late] - u[1]).abs() <= 1e-12 * u[1]);
        assert!((u[1] / u[0] - (1.0 - delta / rho).powi(7)).abs() < 1e-12);
    }

    #[test]
    fn rounding_adapter_scales_and_spreads() {
        let u = [1.0, 3.0];
        let b = [1.0, 1.0];
        let out: OracleOutcome<()> = oracle_from_rounding(&u, &b, 2.0, |x| {
            assert_eq!(x, &[0.5, 1.5]);
            Rounding::Violated(vec![
                Violated { c: 1.0, column: vec![(0, 1.0)] },
                Violated { c: 3.0, column: vec![(0, 1.0), (1, 2.0)] },
            ])
        });
        let OracleOutcome::Dual(c) = out else { panic!() };
        // y = alpha / 4 on both violated constraints
        assert_eq!(c.value, 2.0);
        assert_eq!(c.loads, vec![(0, 1.0), (1, 1.0)]);
    }

    #[test]
    fn rounding_adapter_single_violation_gets_alpha() {
        let out: OracleOutcome<()> =
            oracle_from_rounding(&[1.0], &[1.0], 3.0, |_| Rounding::Violated(vec![Violated { c: 1.0, column: vec![(0, 0.5)] }]));
        assert_eq!(out, OracleOutcome::Dual(DualCandidate { loads: vec![(0, 1.5)], value: 3.0 }));
        let out: OracleOutcome<u8> = oracle_from_rounding(&[1.0], &[1.0], 3.0, |_| Rounding::Primal(7));
        assert_eq!(out, OracleOutcome::Primal(7));
    }

    proptest! {
        // Candidates built by the rounding adapter from primal-violated columns always pass
        // conditions (i) and (ii), and the multipliers stay positive.
        #[test]
        fn adapter_candidates_are_admissible(
            rows in 2usize..8,
            steps in 1usize..60,
            picks in proptest::collection::vec((0usize..8, 0usize..8, 0.1f64..3.0), 60),
        ) {
            let delta = 0.1;
            let rho = 100.0;
            let mut st = MwuState::new(delta, rho, 1.0).unwrap();
            for _ in 0..rows {
                st.add_row(1.0);
            }
            let b = vec![1.0; rows];
            let alpha = 1.0;
            for &(i, j, w) in picks.iter().take(steps) {
                let (i, j) = (i % rows, j % rows);
                // a "path" over rows i and j with lengths x_r / w; violated when shorter than 1
                let out: OracleOutcome<()> = oracle_from_rounding(st.multipliers(), &b, alpha, |x| {
                    let mut col = vec![(i, 1.0 / w)];
                    if j != i {
                        col.push((j, 1.0 / w));
                    }
                    let len: f64 = col.iter().map(|&(r, a)| x[r] * a).sum();
                    if len < 1.0 && 1.0 / w <= rho {
                        Rounding::Violated(vec![Violated { c: 1.0, column: col }])
                    } else {
                        Rounding::Primal(())
                    }
                });
                if let OracleOutcome::Dual(c) = out {
                    st.step(alpha, &c).unwrap();
                }
                prop_assert!(st.multipliers().iter().all(|&u| u > 0.0));
            }
        }
    }
}

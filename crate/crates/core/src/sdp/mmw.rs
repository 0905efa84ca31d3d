//! Matrix multiplicative weights over density matrices in the `D`-scaled space.
//!
//! With `Y = D^(1/2) X D^(1/2)`, the constraints `X_ii = 1` force `tr Y = 1`. Each hyperplane
//! becomes the gain matrix `M = D^(-1/2) (A - b D) D^(-1/2)` with `||M|| <= rho`, and
//! `Y_t = exp(eta S_t) / tr exp(eta S_t)` for the running sum `S_t` and `eta = delta / (2 rho^2)`.
//! Every feasible `Y'` has `M o Y' >= 0`, so `lambda_max(S_t) < 0` certifies that none exists.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::oracle::{sdp_oracle, OracleVerdict, Survivors};
use super::{GramFactor, Provenance, SdpObjective};
use crate::error::{Error, Result};
use crate::trace::{emit, TraceWriter};

/// Bound on `|A o Y| / (D o Y)` over the oracle's planes, times `delta`.
pub const WIDTH_CONSTANT: f64 = 4.0;

#[derive(Clone, Copy, Debug, Default)]
pub struct MmwOptions {
    pub max_iterations: Option<usize>,
    pub projection_dim: Option<usize>,
    pub precision: Option<usize>,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub enum MmwResult {
    Feasible { x: GramFactor, survivors: Survivors },
    /// `certified` when `lambda_max(S) < 0`; otherwise the iteration budget ran out.
    Infeasible { certified: bool },
}

#[derive(Clone, Debug)]
pub struct MmwOutcome {
    pub result: MmwResult,
    pub iterations: usize,
    pub iteration_bound: usize,
    pub rho: f64,
    /// Planes emitted per provenance: S1, S2, S3, objective.
    pub emitted: [usize; 4],
    /// Largest `||M||` seen.
    pub max_width: f64,
}

impl MmwOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self.result, MmwResult::Feasible { .. })
    }
}

#[derive(Serialize)]
struct Record {
    t: usize,
    alpha: f64,
    provenance: Option<Provenance>,
    delta1: f64,
    delta2: f64,
    delta3: f64,
    c_prime: Option<f64>,
}

pub fn width_bound(delta: f64) -> f64 {
    WIDTH_CONSTANT / delta + 1.0
}

/// `ceil(4 rho^2 delta^-2 ln n)`, past which a feasible instance cannot keep yielding planes.
pub fn iteration_bound(rho: f64, delta: f64, n: usize) -> usize {
    (4.0 * rho * rho / (delta * delta) * (n.max(2) as f64).ln()).ceil() as usize
}

fn factor(obj: &SdpObjective, sum: &DMatrix<f64>, eta: f64, opts: &MmwOptions, rng: &mut ChaCha8Rng) -> (GramFactor, f64) {
    let n = sum.nrows();
    let eig = SymmetricEigen::new(sum.clone());
    let top = eig.eigenvalues.max();
    let weights: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let mu = eta * (l - top);
            match opts.precision {
                Some(r) => taylor_exp(mu, r).max(0.0),
                None => mu.exp(),
            }
        })
        .collect();
    let z: f64 = weights.iter().sum();
    let dscale = obj.diag_scale();
    // rows of V diag(sqrt(w / z)) give Y; scaling row i by D_ii^(-1/2) gives X
    let mut f = eig.eigenvectors;
    for k in 0..n {
        let s = (weights[k] / z).sqrt();
        f.column_mut(k).scale_mut(s);
    }
    for i in 0..n {
        f.row_mut(i).scale_mut(1.0 / dscale[i].sqrt());
    }
    if let Some(d) = opts.projection_dim {
        let g = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal) / (d as f64).sqrt());
        f = f * g;
    }
    (GramFactor::new(f), top)
}

fn taylor_exp(x: f64, r: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=r {
        term *= x / k as f64;
        sum += term;
    }
    sum
}

/// Searches for an approximately feasible `X` at objective level `alpha`.
pub fn mmw_solve(
    obj: &SdpObjective,
    delta: f64,
    alpha: f64,
    opts: &MmwOptions,
    mut trace: Option<&mut TraceWriter>,
) -> Result<MmwOutcome> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1/2], got {delta}")));
    }
    let w = obj.total_weight;
    if obj.active() == 0 || w <= 0.0 {
        return Err(Error::InvalidInput("objective has no edges".into()));
    }
    if !(alpha >= w / 2.0 - 1e-12 && alpha <= w + 1e-12) {
        return Err(Error::InvalidInput(format!("alpha = {alpha} outside [W/2, W] with W = {w}")));
    }
    let n = obj.active();
    let rho = width_bound(delta);
    let eta = delta / (2.0 * rho * rho);
    let bound = opts.max_iterations.unwrap_or_else(|| iteration_bound(rho, delta, n));
    let inv_sqrt: Vec<f64> = obj.diag_scale().iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut rng = crate::hash::rng_for(opts.seed, "mmw-projection");
    let mut sum = DMatrix::<f64>::zeros(n, n);
    let mut emitted = [0usize; 4];
    let mut max_width = 0.0f64;
    let mut t = 0;
    loop {
        let (x, top) = factor(obj, &sum, eta, opts, &mut rng);
        if t > 0 && top < 0.0 {
            return Ok(MmwOutcome {
                result: MmwResult::Infeasible { certified: true },
                iterations: t,
                iteration_bound: bound,
                rho,
                emitted,
                max_width,
            });
        }
        let (verdict, report) = sdp_oracle(obj, &x, alpha, delta);
        emit(
            &mut trace,
            &Record {
                t,
                alpha,
                provenance: report.provenance,
                delta1: report.delta1,
                delta2: report.delta2,
                delta3: report.delta3,
                c_prime: report.c_prime,
            },
        )?;
        let h = match verdict {
            OracleVerdict::Feasible(survivors) => {
                return Ok(MmwOutcome {
                    result: MmwResult::Feasible { x, survivors },
                    iterations: t,
                    iteration_bound: bound,
                    rho,
                    emitted,
                    max_width,
                });
            }
            OracleVerdict::Hyperplane(h) => h,
        };
        if t >= bound {
            return Ok(MmwOutcome {
                result: MmwResult::Infeasible { certified: false },
                iterations: t,
                iteration_bound: bound,
                rho,
                emitted,
                max_width,
            });
        }
        let ax = h.apply(&x);
        if ax > h.b - delta + 1e-9 {
            return Err(Error::Admissibility {
                iteration: t,
                detail: format!("{:?} plane has A o X = {ax} > b - delta = {}", h.provenance, h.b - delta),
            });
        }
        let mut m = h.to_matrix(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
            m[(i, i)] -= h.b;
        }
        let spec = SymmetricEigen::new(m.clone()).eigenvalues;
        let width = spec.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        if width > rho * (1.0 + 1e-9) {
            return Err(Error::WidthViolation { iteration: t, excess: width, rho });
        }
        max_width = max_width.max(width);
        emitted[match h.provenance {
            Provenance::S1 => 0,
            Provenance::S2 => 1,
            Provenance::S3 => 2,
            Provenance::Objective => 3,
        }] += 1;
        sum += m;
        t += 1;
    }
}

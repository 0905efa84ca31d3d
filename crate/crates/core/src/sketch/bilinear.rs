//! Bilinear sketch for disagreement queries on unit-weight graphs.
//!
//! Each repetition keeps one counter `Y = sum over live positive edges i<j of a_i b_j`
//! for independent 4-wise independent sign vectors `a`, `b`. A clustering's own
//! upper-triangular form `sum over same-cluster i<j of a_i b_j` is subtracted and the
//! residual squared. The residual is the bilinear form of `M^G - M^C` restricted to
//! `i<j`, so its square has expectation equal to the number of disagreeing pairs, where
//! pairs without a positive edge count as negative.

use crate::error::{Error, Result};
use crate::graph::stream::StreamSource;
use crate::graph::{Clustering, EdgeUpdate};
use crate::hash::{rng_for, FourWiseHash};
use crate::sketch::blob::{BlobHeader, Reader, SketchTag, Writer};
use crate::stats::median;

/// Repetitions processed together in table-driven queries.
const BLOCK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BilinearParams {
    pub eps: f64,
    pub delta: f64,
}

impl BilinearParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidInput(format!("need 0 < eps, delta < 1, got eps = {eps}, delta = {delta}")));
        }
        Ok(BilinearParams { eps, delta })
    }

    /// Median over `ceil(8 ln(1/delta))` groups.
    pub fn groups(&self) -> usize {
        ((8.0 * (1.0 / self.delta).ln()).ceil() as usize).max(1)
    }

    /// Mean over `ceil(36/eps^2)` repetitions per group; Chebyshev with `Var <= 9 D^2`
    /// leaves each group mean outside `(1 +- eps) D` with probability at most 1/4.
    pub fn per_group(&self) -> usize {
        (36.0 / (self.eps * self.eps)).ceil() as usize
    }

    pub fn repetitions(&self) -> usize {
        self.groups() * self.per_group()
    }
}

#[derive(Clone, Debug)]
pub struct BilinearSketch {
    n: usize,
    params: BilinearParams,
    seed: u64,
    groups: usize,
    per_group: usize,
    alpha: Vec<FourWiseHash>,
    beta: Vec<FourWiseHash>,
    counters: Vec<i64>,
}

/// Materialized signs, node-major: entry `j * reps + r` is the sign of node `j` in
/// repetition `r`.
#[derive(Clone, Debug)]
pub struct SignTable {
    reps: usize,
    alpha: Vec<i8>,
    beta: Vec<i8>,
}

impl BilinearSketch {
    pub fn new(n: usize, params: BilinearParams, seed: u64) -> Self {
        Self::with_shape(n, params, seed, params.groups(), params.per_group())
    }

    /// Explicit group shape, for statistical tests on the single-repetition estimator.
    pub fn with_shape(n: usize, params: BilinearParams, seed: u64, groups: usize, per_group: usize) -> Self {
        let reps = groups * per_group;
        let mut rng = rng_for(seed, "bilinear-hashes");
        let mut alpha = Vec::with_capacity(reps);
        let mut beta = Vec::with_capacity(reps);
        for _ in 0..reps {
            alpha.push(FourWiseHash::from_rng(&mut rng));
            beta.push(FourWiseHash::from_rng(&mut rng));
        }
        BilinearSketch { n, params, seed, groups, per_group, alpha, beta, counters: vec![0; reps] }
    }

    /// One pass over a unit-weight stream.
    pub fn from_stream(src: &mut StreamSource, params: BilinearParams, seed: u64) -> Result<Self> {
        if !src.weight_class().is_unit() {
            return Err(Error::UnsupportedWeightClass(format!(
                "bilinear sketch needs unit weights, stream is {}",
                src.weight_class()
            )));
        }
        let mut sk = Self::new(src.n(), params, seed);
        let table = sk.sign_table();
        for e in src.pass() {
            sk.update_with(&table, &e)?;
        }
        Ok(sk)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> BilinearParams {
        self.params
    }

    pub fn repetitions(&self) -> usize {
        self.counters.len()
    }

    pub fn counters(&self) -> &[i64] {
        &self.counters
    }

    /// Words of retained state: one counter plus eight hash coefficients per repetition.
    pub fn state_words(&self) -> usize {
        self.counters.len() * 9
    }

    fn check_update(&self, e: &EdgeUpdate) -> Result<()> {
        if e.weight.abs() != 1 {
            return Err(Error::UnsupportedWeightClass(format!(
                "bilinear sketch needs unit weights, got {}",
                e.weight
            )));
        }
        if e.u >= self.n || e.v >= self.n || e.u == e.v {
            return Err(Error::MalformedStream(format!("bad endpoints ({}, {}) for n = {}", e.u, e.v, self.n)));
        }
        Ok(())
    }

    /// Negative edges leave the counters untouched.
    pub fn update(&mut self, e: &EdgeUpdate) -> Result<()> {
        self.check_update(e)?;
        if e.weight < 0 {
            return Ok(());
        }
        let (i, j) = e.key();
        let s = e.signed_weight();
        for r in 0..self.counters.len() {
            self.counters[r] += s * self.alpha[r].sign(i as u64) * self.beta[r].sign(j as u64);
        }
        Ok(())
    }

    /// Same as [`update`](Self::update) with signs read from a precomputed table.
    pub fn update_with(&mut self, t: &SignTable, e: &EdgeUpdate) -> Result<()> {
        self.check_update(e)?;
        if e.weight < 0 {
            return Ok(());
        }
        let (i, j) = e.key();
        let s = e.signed_weight();
        let a = &t.alpha[i * t.reps..(i + 1) * t.reps];
        let b = &t.beta[j * t.reps..(j + 1) * t.reps];
        for ((c, &x), &y) in self.counters.iter_mut().zip(a).zip(b) {
            *c += s * (x as i64 * y as i64);
        }
        Ok(())
    }

    pub fn sign_table(&self) -> SignTable {
        let reps = self.counters.len();
        let mut alpha = vec![0i8; self.n * reps];
        let mut beta = vec![0i8; self.n * reps];
        for j in 0..self.n {
            for r in 0..reps {
                alpha[j * reps + r] = self.alpha[r].sign(j as u64) as i8;
                beta[j * reps + r] = self.beta[r].sign(j as u64) as i8;
            }
        }
        SignTable { reps, alpha, beta }
    }

    /// Per-repetition residuals `Y_r - sum over same-cluster i<j of a_i b_j`, computed
    /// from hashes with O(k) scratch per repetition.
    pub fn residuals(&self, c: &Clustering) -> Vec<i64> {
        assert_eq!(c.n(), self.n, "clustering must cover every node");
        let mut prefix = vec![0i64; c.k()];
        (0..self.counters.len())
            .map(|r| {
                prefix.iter_mut().for_each(|p| *p = 0);
                let mut own = 0i64;
                for j in 0..self.n {
                    let l = c.label(j);
                    own += prefix[l] * self.beta[r].sign(j as u64);
                    prefix[l] += self.alpha[r].sign(j as u64);
                }
                self.counters[r] - own
            })
            .collect()
    }

    /// Residuals using a sign table: node-major sweeps over blocks of repetitions.
    pub fn residuals_with(&self, t: &SignTable, c: &Clustering) -> Vec<i64> {
        assert_eq!(c.n(), self.n, "clustering must cover every node");
        let reps = t.reps;
        let mut out = vec![0i64; reps];
        let mut prefix = vec![0i32; c.k() * BLOCK];
        let mut own = vec![0i32; BLOCK];
        let mut r0 = 0;
        while r0 < reps {
            let w = BLOCK.min(reps - r0);
            prefix.iter_mut().for_each(|p| *p = 0);
            own.iter_mut().for_each(|p| *p = 0);
            for j in 0..self.n {
                let l = c.label(j);
                let p = &mut prefix[l * BLOCK..l * BLOCK + w];
                let a = &t.alpha[j * reps + r0..j * reps + r0 + w];
                let b = &t.beta[j * reps + r0..j * reps + r0 + w];
                for r in 0..w {
                    own[r] += p[r] * b[r] as i32;
                    p[r] += a[r] as i32;
                }
            }
            for r in 0..w {
                out[r0 + r] = self.counters[r0 + r] - own[r] as i64;
            }
            r0 += w;
        }
        out
    }

    /// Median over groups of the mean of squared residuals.
    pub fn estimate_from_residuals(&self, res: &[i64]) -> f64 {
        let mut means: Vec<f64> = res
            .chunks(self.per_group)
            .map(|g| g.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>() / g.len() as f64)
            .collect();
        median(&mut means)
    }

    pub fn query(&self, c: &Clustering) -> f64 {
        self.estimate_from_residuals(&self.residuals(c))
    }

    pub fn query_with(&self, t: &SignTable, c: &Clustering) -> f64 {
        self.estimate_from_residuals(&self.residuals_with(t, c))
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        if self.n != other.n
            || self.seed != other.seed
            || self.params != other.params
            || self.groups != other.groups
            || self.per_group != other.per_group
        {
            return Err(Error::SketchMismatch(format!(
                "cannot merge bilinear sketches (n {} vs {}, seed {} vs {}, shape {}x{} vs {}x{})",
                self.n, other.n, self.seed, other.seed, self.groups, self.per_group, other.groups, other.per_group
            )));
        }
        Ok(())
    }

    /// Counter-wise sum: the sketch of the concatenated streams.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.compatible(other)?;
        for (a, b) in self.counters.iter_mut().zip(&other.counters) {
            *a += b;
        }
        Ok(())
    }

    pub fn to_blob(&self) -> Vec<u8> {
        let mut w = Writer::new(&BlobHeader {
            tag: SketchTag::Bilinear,
            n: self.n as u64,
            eps: self.params.eps,
            delta: self.params.delta,
            seed: self.seed,
        });
        w.u64(self.groups as u64);
        w.u64(self.per_group as u64);
        for &c in &self.counters {
            w.i64(c);
        }
        w.finish()
    }

    pub fn from_blob(buf: &[u8]) -> Result<Self> {
        let (mut r, h) = Reader::new(buf, SketchTag::Bilinear)?;
        let params = BilinearParams::new(h.eps, h.delta)?;
        let groups = r.u64()? as usize;
        let per_group = r.u64()? as usize;
        let mut sk = Self::with_shape(h.n as usize, params, h.seed, groups, per_group);
        for c in sk.counters.iter_mut() {
            *c = r.i64()?;
        }
        r.finish()?;
        Ok(sk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::eval::exact_disagree;
    use crate::graph::gen::{gen_instance, InstanceKind};
    use proptest::prelude::*;

    fn small_params() -> BilinearParams {
        BilinearParams::new(0.5, 0.2).unwrap()
    }

    #[test]
    fn shape_constants() {
        let p = BilinearParams::new(0.15, 0.05).unwrap();
        assert_eq!(p.groups(), 24);
        assert_eq!(p.per_group(), 1600);
    }

    #[test]
    fn negative_edges_do_not_touch_counters() {
        let mut sk = BilinearSketch::new(5, small_params(), 1);
        sk.update(&EdgeUpdate::insert(0, 3, -1)).unwrap();
        assert!(sk.counters().iter().all(|&c| c == 0));
        assert!(sk.update(&EdgeUpdate::insert(0, 3, 2)).is_err());
    }

    #[test]
    fn counters_match_offline_recomputation() {
        let edges = [(0usize, 2usize), (1, 4), (3, 2)];
        let mut sk = BilinearSketch::with_shape(5, small_params(), 9, 3, 7);
        for &(u, v) in &edges {
            sk.update(&EdgeUpdate::insert(u, v, 1)).unwrap();
        }
        let mut rng = rng_for(9, "bilinear-hashes");
        for r in 0..21 {
            let a = FourWiseHash::from_rng(&mut rng);
            let b = FourWiseHash::from_rng(&mut rng);
            let y: i64 = edges
                .iter()
                .map(|&(u, v)| a.sign(u.min(v) as u64) * b.sign(u.max(v) as u64))
                .sum();
            assert_eq!(sk.counters()[r], y);
        }
    }

    #[test]
    fn single_clique_query_is_exactly_zero() {
        let inst = gen_instance(&InstanceKind::Cliques { k: 1, negatives: false }, 9, 0).unwrap();
        let mut src = inst.source;
        let sk = BilinearSketch::from_stream(&mut src, small_params(), 4).unwrap();
        assert!(sk.residuals(&Clustering::one_cluster(9)).iter().all(|&x| x == 0));
    }

    #[test]
    fn table_and_hash_paths_agree() {
        let inst = gen_instance(&InstanceKind::Planted { k: 3, flip: 0.2 }, 14, 2).unwrap();
        let mut src = inst.source;
        let sk = BilinearSketch::from_stream(&mut src, BilinearParams::new(0.3, 0.1).unwrap(), 5).unwrap();
        let mut direct = BilinearSketch::new(14, BilinearParams::new(0.3, 0.1).unwrap(), 5);
        for e in src.updates() {
            direct.update(e).unwrap();
        }
        assert_eq!(sk.counters(), direct.counters());
        let t = sk.sign_table();
        for labels in [vec![0; 14], (0..14).collect(), (0..14).map(|i| i % 4).collect::<Vec<_>>()] {
            let c = Clustering::from_labels(&labels);
            assert_eq!(sk.residuals(&c), sk.residuals_with(&t, &c));
        }
    }

    #[test]
    fn blob_round_trip_and_mismatch() {
        let mut sk = BilinearSketch::with_shape(6, small_params(), 3, 2, 5);
        sk.update(&EdgeUpdate::insert(1, 2, 1)).unwrap();
        let back = BilinearSketch::from_blob(&sk.to_blob()).unwrap();
        assert_eq!(back.counters(), sk.counters());
        let mut other = BilinearSketch::with_shape(6, small_params(), 4, 2, 5);
        assert!(other.merge(&sk).is_err());
        let mut bytes = sk.to_blob();
        bytes.push(0);
        assert!(BilinearSketch::from_blob(&bytes).is_err());
    }

    #[test]
    fn accurate_on_a_complete_graph() {
        let inst = gen_instance(&InstanceKind::RandomSigned { density: 1.0, w_star: 1 }, 20, 11).unwrap();
        let mut src = inst.source;
        let s = src.oracle_snapshot();
        let sk = BilinearSketch::from_stream(&mut src, BilinearParams::new(0.2, 0.05).unwrap(), 8).unwrap();
        let t = sk.sign_table();
        let c = Clustering::from_labels(&(0..20).map(|i| i % 3).collect::<Vec<_>>());
        let d = exact_disagree(&s, &c) as f64;
        assert!((sk.query_with(&t, &c) - d).abs() <= 0.2 * d);
    }

    fn stream_strategy() -> impl Strategy<Value = Vec<(usize, usize, i64)>> {
        proptest::collection::vec((0usize..8, 0usize..8, prop_oneof![Just(1i64), Just(-1i64)]), 0..20)
            .prop_map(|v| v.into_iter().filter(|(u, w, _)| u != w).collect())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn merge_and_cancellation_are_exact(a in stream_strategy(), b in stream_strategy()) {
            let p = small_params();
            let mk = || BilinearSketch::with_shape(8, p, 21, 2, 8);
            let (mut sa, mut sb, mut sab, mut inv) = (mk(), mk(), mk(), mk());
            for &(u, v, w) in &a {
                sa.update(&EdgeUpdate::insert(u, v, w)).unwrap();
                sab.update(&EdgeUpdate::insert(u, v, w)).unwrap();
                inv.update(&EdgeUpdate::delete(u, v, w)).unwrap();
            }
            for &(u, v, w) in &b {
                sb.update(&EdgeUpdate::insert(u, v, w)).unwrap();
                sab.update(&EdgeUpdate::insert(u, v, w)).unwrap();
            }
            let before = sa.clone();
            sa.merge(&mk()).unwrap();
            prop_assert_eq!(sa.counters(), before.counters());
            sa.merge(&sb).unwrap();
            prop_assert_eq!(sa.counters(), sab.counters());
            let mut cancel = before.clone();
            cancel.merge(&inv).unwrap();
            prop_assert!(cancel.counters().iter().all(|&c| c == 0));
        }
    }
}

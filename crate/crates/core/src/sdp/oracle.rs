//! Separation oracle for the max-agree relaxation.

use serde::Serialize;

use super::{edge_value, GramFactor, Hyperplane, Provenance, SdpObjective};

/// Nodes and edges kept once `S1`, `S2` and `S3` are ignored.
#[derive(Clone, Debug)]
pub struct Survivors {
    pub nodes: Vec<bool>,
    pub edges: Vec<bool>,
    /// `C' o X`.
    pub value: f64,
}

#[derive(Clone, Debug)]
pub enum OracleVerdict {
    Hyperplane(Hyperplane),
    /// `C' o X >= (1 - 4 delta) alpha`; `X` goes to rounding.
    Feasible(Survivors),
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleReport {
    pub provenance: Option<Provenance>,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    /// `C' o X`, when the oracle got that far.
    pub c_prime: Option<f64>,
}

pub fn sdp_oracle(obj: &SdpObjective, x: &GramFactor, alpha: f64, delta: f64) -> (OracleVerdict, OracleReport) {
    let n = obj.active();
    let norms: Vec<f64> = (0..n).map(|i| x.norm2(i)).collect();
    let s1: Vec<usize> = (0..n).filter(|&i| norms[i] >= 1.0 + delta).collect();
    let s2: Vec<usize> = (0..n).filter(|&i| norms[i] <= 1.0 - delta).collect();
    let s3: Vec<usize> = (0..obj.edges.len())
        .filter(|&e| {
            let (i, j, _) = obj.edges[e];
            x.dot(i, j) < -delta
        })
        .collect();
    let delta1: f64 = s1.iter().map(|&i| obj.degree[i]).sum();
    let delta2: f64 = s2.iter().map(|&i| obj.degree[i]).sum();
    let delta3: f64 = s3.iter().map(|&e| obj.edges[e].2.abs()).sum();
    let mut report = OracleReport { provenance: None, delta1, delta2, delta3, c_prime: None };
    let threshold = delta * alpha;

    let plane = if delta1 >= threshold {
        Some(Hyperplane {
            entries: s1.iter().map(|&i| (i, i, -obj.degree[i] / delta1)).collect(),
            b: -1.0,
            provenance: Provenance::S1,
        })
    } else if delta2 >= threshold {
        Some(Hyperplane {
            entries: s2.iter().map(|&i| (i, i, obj.degree[i] / delta2)).collect(),
            b: 1.0,
            provenance: Provenance::S2,
        })
    } else if delta3 >= threshold {
        // magnitudes, split over A_ij and A_ji; a signed weight would not separate on H-
        Some(Hyperplane {
            entries: s3
                .iter()
                .map(|&e| {
                    let (i, j, w) = obj.edges[e];
                    (i.min(j), i.max(j), w.abs() / (2.0 * delta3))
                })
                .collect(),
            b: 0.0,
            provenance: Provenance::S3,
        })
    } else {
        None
    };
    if let Some(h) = plane {
        report.provenance = Some(h.provenance);
        return (OracleVerdict::Hyperplane(h), report);
    }

    let mut nodes = vec![true; n];
    for &i in s1.iter().chain(&s2) {
        nodes[i] = false;
    }
    let mut edges: Vec<bool> = obj.edges.iter().map(|&(i, j, _)| nodes[i] && nodes[j]).collect();
    for &e in &s3 {
        edges[e] = false;
    }
    let value: f64 = obj
        .edges
        .iter()
        .zip(&edges)
        .filter(|(_, &keep)| keep)
        .map(|(&(i, j, w), _)| edge_value(x, i, j, w))
        .sum();
    report.c_prime = Some(value);
    if value < (1.0 - 4.0 * delta) * alpha {
        let mut entries = Vec::new();
        for (&(i, j, w), _) in obj.edges.iter().zip(&edges).filter(|(_, &keep)| keep) {
            let (i, j) = (i.min(j), i.max(j));
            if w > 0.0 {
                entries.push((i, j, w / (2.0 * alpha)));
            } else {
                let a = -w / (2.0 * alpha);
                entries.push((i, i, a));
                entries.push((j, j, a));
                entries.push((i, j, -a));
            }
        }
        report.provenance = Some(Provenance::Objective);
        let h = Hyperplane { entries, b: 1.0 - 3.0 * delta, provenance: Provenance::Objective };
        return (OracleVerdict::Hyperplane(h), report);
    }
    (OracleVerdict::Feasible(Survivors { nodes, edges, value }), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_objective(rng: &mut ChaCha8Rng, n: usize) -> SdpObjective {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if v > u + 1 && rng.random_bool(0.6) {
                    let w: f64 = rng.random_range(1..4) as f64;
                    edges.push((u, v, if rng.random_bool(0.5) { w } else { -w }));
                }
            }
        }
        // a path keeps every node active
        for u in 1..n {
            edges.push((u - 1, u, 1.0));
        }
        SdpObjective::new(n, edges)
    }

    fn random_factor(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> GramFactor {
        GramFactor::new(DMatrix::from_fn(n, d, |_, _| scale * rng.sample::<f64, _>(StandardNormal)))
    }

    /// Feasible point built from a clustering: orthonormal cluster vectors.
    fn integral_factor(labels: &[usize]) -> GramFactor {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        GramFactor::new(DMatrix::from_fn(labels.len(), k, |i, c| if labels[i] == c { 1.0 } else { 0.0 }))
    }

    #[test]
    fn identity_gram_has_no_violations() {
        let obj = SdpObjective::new(3, [(0, 1, 1.0), (1, 2, -1.0)]);
        let (_, rep) = sdp_oracle(&obj, &GramFactor::identity(3), 1.0, 0.1);
        assert_eq!((rep.delta1, rep.delta2, rep.delta3), (0.0, 0.0, 0.0));
    }

    #[test]
    fn long_vectors_give_the_s1_plane() {
        let obj = SdpObjective::new(3, [(0, 1, 1.0), (1, 2, -1.0)]);
        let x = GramFactor::new(DMatrix::identity(3, 3) * 2f64.sqrt());
        let delta = 0.1;
        let (v, rep) = sdp_oracle(&obj, &x, 1.5, delta);
        let OracleVerdict::Hyperplane(h) = v else { panic!("expected a hyperplane") };
        assert_eq!(h.provenance, Provenance::S1);
        assert_eq!(rep.delta1, 4.0);
        assert!((h.apply(&x) + 2.0).abs() < 1e-12);
        assert_eq!(h.b, -1.0);
        assert!(h.apply(&x) <= h.b - delta);
    }

    #[test]
    fn width_certificate_on_random_psd_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = 4.0;
        let mut checked = 0;
        for round in 0..40 {
            let n = 6 + round % 4;
            let obj = random_objective(&mut rng, n);
            let delta = [0.05, 0.1, 0.2][round % 3];
            let w = obj.total_weight;
            let alpha = rng.random_range(w / 2.0..=w);
            let scale = rng.random_range(0.2..0.8);
            let x = random_factor(&mut rng, n, n, scale);
            let (OracleVerdict::Hyperplane(h), _) = sdp_oracle(&obj, &x, alpha, delta) else { continue };
            let dscale = obj.diag_scale();
            for _ in 0..100 {
                let y = random_factor(&mut rng, n, 3, 1.0).gram();
                let dy: f64 = (0..n).map(|i| dscale[i] * y[(i, i)]).sum();
                assert!(h.apply_matrix(&y).abs() <= c / delta * dy + 1e-9);
            }
            checked += 1;
        }
        assert!(checked > 10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn planes_separate_by_delta_and_keep_feasible_points(seed in any::<u64>(), scale in 0.1f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = 6;
            let obj = random_objective(&mut rng, n);
            let delta = 0.1;
            // a clustering whose agreement is at least alpha, so its vectors are feasible
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
            let xp = integral_factor(&labels);
            let value = obj.value(&xp);
            let w = obj.total_weight;
            let alpha = value.min(w);
            prop_assume!(alpha >= w / 2.0);
            let x = random_factor(&mut rng, n, n, scale);
            if let (OracleVerdict::Hyperplane(h), _) = sdp_oracle(&obj, &x, alpha, delta) {
                prop_assert!(h.apply(&x) <= h.b - delta + 1e-12);
                prop_assert!(h.apply(&xp) >= h.b - 1e-12, "{:?} {} < {}", h.provenance, h.apply(&xp), h.b);
            }
        }
    }
}

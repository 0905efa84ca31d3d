//! Random-hyperplane rounding of an approximately feasible Gram factor.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::oracle::Survivors;
use super::{GramFactor, SdpObjective};
use crate::graph::Clustering;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingChoice {
    Hyperplanes(usize),
    OneCluster,
    Singletons,
}

/// Clustering of the objective's local nodes with its exact agreement on `H`.
#[derive(Clone, Debug)]
pub struct Rounded {
    pub clustering: Clustering,
    pub agreement: f64,
    pub choice: RoundingChoice,
}

/// Cell of each kept vector under `h` random hyperplanes; vectors not kept get their own cell.
pub fn hyperplane_labels<R: Rng>(x: &GramFactor, keep: &[bool], h: usize, rng: &mut R) -> Clustering {
    let d = x.dim();
    let normals: Vec<Vec<f64>> = (0..h).map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let raw: Vec<usize> = (0..x.len())
        .map(|i| {
            if !keep[i] {
                return (1 << h) + i;
            }
            let row = x.rows.row(i);
            normals
                .iter()
                .enumerate()
                .filter(|(_, r)| row.iter().zip(r.iter()).map(|(a, b)| a * b).sum::<f64>() >= 0.0)
                .fold(0, |acc, (k, _)| acc | 1 << k)
        })
        .collect();
    Clustering::from_labels(&raw)
}

/// Best of `trials` roundings with each of 1, 2 and 3 hyperplanes and the two trivial
/// clusterings, scored exactly on the objective's edges. Ignored nodes end up alone.
pub fn round_solution<R: Rng>(obj: &SdpObjective, x: &GramFactor, survivors: &Survivors, trials: usize, rng: &mut R) -> Rounded {
    let n = obj.active();
    let mut unit = x.rows.clone();
    for i in 0..n {
        let norm = x.norm2(i).sqrt();
        if survivors.nodes[i] && norm > 0.0 {
            unit.row_mut(i).scale_mut(1.0 / norm);
        }
    }
    let unit = GramFactor::new(unit);
    let mut best = {
        let c = Clustering::one_cluster(n);
        Rounded { agreement: obj.agreement(&c), clustering: c, choice: RoundingChoice::OneCluster }
    };
    let single = Clustering::singletons(n);
    let a = obj.agreement(&single);
    if a > best.agreement {
        best = Rounded { clustering: single, agreement: a, choice: RoundingChoice::Singletons };
    }
    for h in 1..=3 {
        for _ in 0..trials {
            let c = hyperplane_labels(&unit, &survivors.nodes, h, rng);
            let a = obj.agreement(&c);
            if a > best.agreement {
                best = Rounded { clustering: c, agreement: a, choice: RoundingChoice::Hyperplanes(h) };
            }
        }
    }
    best
}

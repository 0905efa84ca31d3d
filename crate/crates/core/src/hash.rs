//! Seed derivation and a 4-wise independent sign hash.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Derives a component seed from a master seed and a label, so that components stay
/// decoupled when others are added or reconfigured.
pub fn sub_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

pub fn rng_for(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(seed, label))
}

#[inline]
fn mod_mersenne(x: u128) -> u64 {
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let mut r = lo + (hi & MERSENNE_61) + (hi >> 61);
    while r >= MERSENNE_61 {
        r -= MERSENNE_61;
    }
    r
}

/// Degree-3 polynomial over GF(2^61 - 1). Values on distinct inputs are 4-wise independent
/// and uniform on the field; the sign is taken from the low bit, which is unbiased up to
/// 2^-61.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourWiseHash {
    coeffs: [u64; 4],
}

impl FourWiseHash {
    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::from_rng(&mut rng)
    }

    pub fn from_rng<R: Rng>(rng: &mut R) -> Self {
        let mut coeffs = [0u64; 4];
        for c in &mut coeffs {
            *c = rng.random_range(0..MERSENNE_61);
        }
        FourWiseHash { coeffs }
    }

    #[inline]
    pub fn value(&self, x: u64) -> u64 {
        let x = x % MERSENNE_61;
        let [a, b, c, d] = self.coeffs;
        let mut acc = a;
        for coef in [b, c, d] {
            acc = mod_mersenne(acc as u128 * x as u128 + coef as u128);
        }
        acc
    }

    #[inline]
    pub fn sign(&self, x: u64) -> i64 {
        if self.value(x) & 1 == 0 {
            1
        } else {
            -1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_reduction() {
        for x in [0u128, 1, MERSENNE_61 as u128, (MERSENNE_61 as u128) * (MERSENNE_61 as u128) - 1, u64::MAX as u128] {
            assert_eq!(mod_mersenne(x) as u128, x % MERSENNE_61 as u128);
        }
    }

    #[test]
    fn polynomial_matches_direct_evaluation() {
        let h = FourWiseHash::from_seed(3);
        let p = MERSENNE_61 as u128;
        for x in [0u64, 1, 2, 17, 1 << 40] {
            let xx = x as u128 % p;
            let [a, b, c, d] = h.coeffs.map(|v| v as u128);
            let direct = (((a * xx % p) * xx % p) * xx % p + (b * xx % p) * xx % p + c * xx % p + d) % p;
            assert_eq!(h.value(x) as u128, direct);
        }
    }

    #[test]
    fn sub_seeds_differ_by_label() {
        assert_ne!(sub_seed(1, "a"), sub_seed(1, "b"));
        assert_ne!(sub_seed(1, "a"), sub_seed(2, "a"));
        assert_eq!(sub_seed(5, "x"), sub_seed(5, "x"));
    }

    // Over many seeds, products of signs on 4 distinct points average to zero and single
    // signs are balanced.
    #[test]
    fn fourwise_sign_moments() {
        let trials = 20_000;
        let pts = [3u64, 11, 12, 40];
        let (mut m1, mut m2, mut m4) = (0i64, 0i64, 0i64);
        for s in 0..trials {
            let h = FourWiseHash::from_seed(s);
            let sg: Vec<i64> = pts.iter().map(|&p| h.sign(p)).collect();
            m1 += sg[0];
            m2 += sg[0] * sg[1];
            m4 += sg.iter().product::<i64>();
        }
        let band = 5.0 * (trials as f64).sqrt();
        for m in [m1, m2, m4] {
            assert!((m as f64).abs() < band, "moment {m}");
        }
    }
}

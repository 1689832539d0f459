//! Counter-based standard normal variates keyed by `(seed, n, k)`.
//!
//! Each resolution level reads its own ChaCha8 stream and coefficient `k`
//! sits at a fixed word offset in it, so any coefficient can be produced
//! on its own and bulk generation of a level reads the stream in order.
//! Both routes give bit-identical values.

use std::f64::consts::TAU;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words consumed per variate (two `u64` draws).
const WORDS_PER_VARIATE: u128 = 4;

/// Source of the coefficients `ξ_{n,k}` for one seed.
#[derive(Debug, Clone)]
pub struct CoefficientGenerator {
    base: ChaCha8Rng,
}

fn stream_id(n: i32) -> u64 {
    // levels are small in magnitude; keep negative ones on distinct streams
    (n as i64 as u64) ^ (1 << 63)
}

fn unit_open(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (-53f64).exp2()
}

fn unit_closed_open(bits: u64) -> f64 {
    (bits >> 11) as f64 * (-53f64).exp2()
}

/// Box-Muller on a pair of 64-bit words; `u1` lies in `(0, 1]`.
fn box_muller(first: u64, second: u64) -> f64 {
    let radius = (-2.0 * unit_open(first).ln()).sqrt();
    radius * (TAU * unit_closed_open(second)).cos()
}

impl CoefficientGenerator {
    pub fn new(seed: u64) -> Self {
        Self {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn positioned(&self, n: i32, k: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(stream_id(n));
        rng.set_word_pos(k as u128 * WORDS_PER_VARIATE);
        rng
    }

    /// `ξ_{n,k}`.
    pub fn normal(&self, n: i32, k: u64) -> f64 {
        let mut rng = self.positioned(n, k);
        let first = rng.next_u64();
        box_muller(first, rng.next_u64())
    }

    /// Writes `ξ_{n,0}, ξ_{n,1}, ...` into `out`.
    pub fn fill_level(&self, n: i32, out: &mut [f64]) {
        let mut rng = self.positioned(n, 0);
        for slot in out {
            let first = rng.next_u64();
            *slot = box_muller(first, rng.next_u64());
        }
    }
}

/// SplitMix64 finalizer; a bijection on `u64`.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of path `index` in an ensemble. Injective in `index` for a fixed
/// `base_seed`.
pub fn path_seed(base_seed: u64, index: u64) -> u64 {
    mix64(base_seed ^ mix64(index.wrapping_add(0x9e37_79b9_7f4a_7c15)))
}

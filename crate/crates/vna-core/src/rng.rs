//! Deterministic RNG streams. Every randomized routine takes a stream
//! derived from the run seed and a role tag, so concurrent work and
//! re-ordering cannot change results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Independent stream for (seed, role, index).
pub fn stream(seed: u64, role: u64, index: u64) -> ChaCha8Rng {
    let s = splitmix(seed ^ splitmix(role.wrapping_mul(0x51_7c_c1_b7_27_22_0a_95) ^ index));
    ChaCha8Rng::seed_from_u64(s)
}

pub mod role {
    pub const BASE_POINT: u64 = 1;
    pub const LOOPS: u64 = 2;
    pub const ADMISSIBILITY: u64 = 3;
    pub const FIBER_COUNT: u64 = 4;
    pub const PROPERNESS: u64 = 5;
    pub const PROJECTIONS: u64 = 6;
    pub const NORM_ORACLE: u64 = 7;
}

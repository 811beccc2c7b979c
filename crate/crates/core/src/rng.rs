//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a ChaCha stream addressed by
//! `(seed, domain, frame, index)`, so per-particle work can run in any order
//! or on any number of threads and still produce identical numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates independent consumers of the same user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    FilterInit = 1,
    Motion = 2,
    Resample = 3,
    Ransac = 4,
    Detector = 5,
    GroundTruthWalk = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for item `index` of step `frame`.
pub fn stream(seed: u64, domain: Domain, frame: u32, index: u32) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(domain as u64));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(((frame as u64) << 32) | index as u64);
    rng
}

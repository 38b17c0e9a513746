//! Counter-based random streams keyed by `(study_seed, unit_id)`.
//!
//! Each unit of work (a training run, a co-optimization seed, a sampled
//! fixture) draws from its own ChaCha8 stream, so the order in which a worker
//! pool schedules units never changes the numbers any unit sees.

use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Independent stream for one unit of a study.
pub fn unit_rng(study_seed: u64, unit_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(study_seed);
    rng.set_stream(unit_id);
    rng
}

/// Stable 64-bit mix of several identifiers into one unit id (splitmix64 finalizer).
pub fn mix_ids(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 31;
    }
    h
}

//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit `&mut R: Rng`. Experiments derive
//! one independent stream per (replicate, task) pair from a master seed, so that
//! adding replicates or changing the worker count never perturbs other streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The concrete generator used for all derived streams.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a path of counters into a single 64-bit stream id.
pub fn stream_id(path: &[u64]) -> u64 {
    path.iter()
        .fold(0x6A09_E667_F3BC_C909, |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Deterministic stream for `path` under `master`.
pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(path));
    rng
}

//! Seeded, splittable random streams.
//!
//! Every stochastic computation derives its generator from a master seed and
//! a stream number, so results never depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Trials per Monte Carlo batch; one RNG stream per batch.
pub const BATCH_SIZE: u64 = 4096;

pub fn stream(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for batch `batch` of experiment `arm` (e.g. hypothesis index).
pub fn batch_stream(arm: u64, batch: u64) -> u64 {
    (arm << 40) | batch
}

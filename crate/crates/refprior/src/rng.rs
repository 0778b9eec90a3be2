//! Seeded RNG streams.
//!
//! Every stochastic routine takes an explicit stream so that reruns with the
//! same master seed are bit-reproducible. Independent work units (experiment
//! cells, grid points) get their own stream id, which keeps results identical
//! no matter how the units are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeedStream = ChaCha8Rng;

/// A stream derived from a master seed and a stream id. Distinct ids yield
/// statistically independent sequences for the same master seed.
pub fn stream(master: u64, id: u64) -> SeedStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id);
    rng
}

//! Seeded generators. Every stochastic step of a run draws from its own
//! ChaCha stream keyed by the run seed, so initialization, splitting and
//! batch order never consume each other's randomness.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const STREAM_INIT: u64 = 1;
pub(crate) const STREAM_SPLIT: u64 = 2;
pub(crate) const STREAM_SHUFFLE: u64 = 3;
pub(crate) const STREAM_SYNTH: u64 = 4;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

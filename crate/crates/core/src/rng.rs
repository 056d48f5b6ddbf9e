//! Reproducible random streams.
//!
//! Every replicate draws from its own ChaCha8 stream derived from a master
//! seed and the replicate index, so results do not depend on scheduling.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

/// Stream `index` of the generator seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

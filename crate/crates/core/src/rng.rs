//! Seeded randomness. Every run derives independent ChaCha8 streams from a
//! user seed and a substream id, so results depend only on the listed seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name of the generator, recorded next to experiment output.
pub const GENERATOR: &str = "chacha8 (rand_chacha 0.9, seed_from_u64 + set_stream)";

pub type Stream = ChaCha8Rng;

/// Substream ids used by the optimizers.
pub const ORACLE_STREAM: u64 = 0;
pub const QUANTIZER_STREAM: u64 = 1;

pub fn stream(seed: u64, substream: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(substream);
    rng
}

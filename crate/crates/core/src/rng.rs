//! Seed handling for reproducible, embarrassingly parallel Monte Carlo.
//!
//! Every trial gets its own generator derived from `(master_seed, stream)`;
//! ChaCha streams guarantee the per-trial sequences are independent and that
//! results do not depend on how trials are scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator for a single Monte Carlo stream.
pub type StreamRng = ChaCha8Rng;

/// Derive the generator for stream `stream` of a master seed.
pub fn stream_rng(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

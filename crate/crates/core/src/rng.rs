//! Seeded random streams.
//!
//! Every random choice in the crate comes from a ChaCha20 stream derived
//! from a 64-bit seed. Independent workers (trials, components, key
//! guesses) use `(seed, index)` streams so results never depend on thread
//! scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub type Stream = ChaCha20Rng;

pub fn stream(seed: u64) -> Stream {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Stream number `index` under `seed`. Distinct indices give independent
/// keystreams.
pub fn substream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Child seed for nested derivations (trial -> component).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}

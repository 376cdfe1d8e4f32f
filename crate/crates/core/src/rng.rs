//! Seeded, named random streams.
//!
//! All randomness in the crate flows from a single master seed split into
//! independent per-component streams, so every subsystem is reproducible on
//! its own regardless of scheduling or call order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream salts for the simulator's named components.
pub mod salt {
    pub const TOPOLOGY: u64 = 1;
    pub const ARRIVALS: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const SEARCH: u64 = 4;
    /// Per-agent streams start here; agent `k` uses `AGENT_BASE + k`.
    pub const AGENT_BASE: u64 = 1 << 32;
}

/// SplitMix64 finalizer; decorrelates (seed, salt) pairs.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic stream derived from `(master, salt)`.
pub fn stream(master: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(master ^ mix(salt)))
}

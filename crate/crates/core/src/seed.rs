//! Deterministic derivation of per-replication random streams.
//!
//! Replication `r` of axis point `j` under base seed `s` is driven by a
//! ChaCha8 generator seeded with
//!
//! ```text
//! replication_seed(axis_seed(s, j), r)
//!   = splitmix64(splitmix64(splitmix64(s) ^ j) ^ r)
//! ```
//!
//! where `splitmix64` is the standard SplitMix64 finalizer (golden-gamma
//! increment followed by the 30/27/31 xor-shift multiply rounds). These
//! functions are part of the stable output contract: changing them changes
//! every simulated number.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 42;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for axis point `axis` of a sweep.
pub fn axis_seed(base: u64, axis: u64) -> u64 {
    splitmix64(splitmix64(base) ^ axis)
}

/// Seed for replication `rep` under a (possibly axis-derived) seed.
pub fn replication_seed(seed: u64, rep: u64) -> u64 {
    splitmix64(seed ^ rep)
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

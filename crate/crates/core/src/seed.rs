//! Seed splitting.
//!
//! Every random decision in a run draws from its own ChaCha8 stream whose seed
//! is derived from the master seed, a purpose tag and a counter. Derivation is
//! a pair of SplitMix64 finalisers, so sub-seeds are independent of the order
//! in which concurrent runs happen to request them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tags for [`derive_seed`].
pub mod stream {
    pub const ROUTER_CORE: u64 = 1;
    pub const ENDPOINTS: u64 = 2;
    pub const FLOWS: u64 = 3;
    pub const ROUTING: u64 = 4;
    pub const ENGINE: u64 = 5;
    pub const REPEAT: u64 = 6;
    pub const ATTEMPT: u64 = 7;
    pub const SCHEDULE: u64 = 8;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the `index`-th sub-seed of `master` for the given purpose.
pub fn derive_seed(master: u64, purpose: u64, index: u64) -> u64 {
    let tag = splitmix64(purpose.wrapping_mul(0xD1B5_4A32_D192_ED03) ^ index);
    splitmix64(master ^ tag)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

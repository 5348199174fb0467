//! Seed derivation. Every random stream in the crate is a ChaCha generator
//! whose seed is derived from a master seed, a purpose tag and an index, so
//! results never depend on the order in which work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type Rng = ChaCha20Rng;

/// Purpose tags for [`derive_seed`].
pub mod domain {
    pub const SCENARIO: u64 = 0x5343_454e;
    pub const SCENARIO_JITTER: u64 = 0x4a49_5454;
    pub const MEASUREMENT: u64 = 0x4d45_4153;
    pub const WINDOWS: u64 = 0x5749_4e44;
    pub const INIT: u64 = 0x494e_4954;
    pub const BATCH: u64 = 0x4241_5443;
    pub const EVAL: u64 = 0x4556_414c;
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a master seed, a purpose tag and an index into an independent seed.
pub fn derive_seed(master: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ domain) ^ index)
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, domain: u64, index: u64) -> Rng {
    rng_from_seed(derive_seed(master, domain, index))
}

//! Deterministic seed derivation.
//!
//! Every random stream in the crate is keyed by `(master seed, stream index)`
//! so results never depend on the order in which parallel tasks run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_mul(GOLDEN).wrapping_add(1)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Reserved stream labels.
pub(crate) mod streams {
    pub const FEATURES: u64 = 0xFEA7_0000;
    pub const OUTCOMES: u64 = 0x0C7C_0000;
    pub const HOLDOUT: u64 = 0x401D_0000;
    pub const TUNING: u64 = 0x7E11_0000;
    pub const VALIDATION: u64 = 0xB007_0000;
    pub const REFERENCE: u64 = u64::MAX;
}

//! Deterministic seed derivation.
//!
//! Every random stream is a ChaCha8 generator keyed by a 64-bit seed derived
//! from the master seed and a path of indices (attempt number, stratum, ...).
//! Streams with different paths are independent, so adding work in one place
//! never perturbs draws elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Domain tags that keep streams for different purposes apart.
pub mod domain {
    pub const ATTEMPT: u64 = 0x6174_7465_6d70_7400;
    pub const STRATUM: u64 = 0x7374_7261_7475_6d00;
    pub const REPLICATE: u64 = 0x7265_706c_6963_6100;
    pub const POPULATION: u64 = 0x706f_7075_6c61_7400;
    pub const AUDIT: u64 = 0x6175_6469_7400_0000;
    pub const REALIZE: u64 = 0x7265_616c_697a_6500;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` together with `path` into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

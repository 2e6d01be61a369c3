//! Seeded, stream-splittable random number generation.
//!
//! Every stochastic operation derives its generators from a user seed plus
//! a fixed domain constant, then assigns one ChaCha stream per work unit
//! (sampling chunk or oracle replicate). Results are therefore identical
//! for a given seed no matter how many worker threads run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Draws per parallel sampling chunk.
pub const CHUNK_SIZE: usize = 1024;

/// Domain separators so that different operations sharing a user seed do
/// not consume the same underlying streams.
pub mod domain {
    pub const SPACE_SAMPLE: u64 = 0x53_50_41_43_45; // "SPACE"
    pub const INFO_SS: u64 = 0x49_4e_46_4f; // "INFO"
    pub const ORACLE: u64 = 0x4f_52_41_43; // "ORAC"
    pub const SIM_DATASET: u64 = 0x53_49_4d; // "SIM"
}

/// splitmix64 finalizer; mixes a seed with a domain constant.
pub fn derive_seed(seed: u64, domain: u64) -> u64 {
    let mut z = seed ^ domain.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for stream `stream` of the given (already derived) seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

//! Deterministic derivation of independent random streams.
//!
//! Every repetition of every experiment cell draws from its own ChaCha
//! stream whose seed is a hash of the base seed and a path of integer
//! coordinates (cell indices, repetition, mechanism tag). Results therefore
//! do not depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Mechanism tags mixed into stream ids.
pub mod tag {
    pub const GRAPH: u64 = 1;
    pub const LAPLACE: u64 = 2;
    pub const EDGE_FLIP: u64 = 3;
    pub const PAIRWISE_FLIP: u64 = 4;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes `base` and `path` into a 64-bit stream id.
pub fn stream_id(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |h, &p| splitmix64(h.wrapping_mul(0xD605_BBB5_8C8A_BBFD) ^ p))
}

/// A ChaCha generator keyed by [`stream_id`].
pub fn stream_rng(base: u64, path: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(stream_id(base, path))
}

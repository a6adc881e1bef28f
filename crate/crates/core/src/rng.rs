//! Counter-derived random streams.
//!
//! Every stochastic routine in the crate takes a `(seed, stream)` pair rather
//! than sharing one generator, so concurrent workers draw from independent
//! streams and output never depends on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// RNG for stream `stream` of master seed `seed`.
///
/// Streams of the same seed are independent ChaCha streams; the same pair
/// always yields the same draws.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stable hash used to derive per-cell seeds from a master seed.
///
/// SplitMix64 finalizer; bijective on u64, so distinct cells never collide.
pub fn derive_seed(seed: u64, cell: u64) -> u64 {
    let mut z = seed ^ cell.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

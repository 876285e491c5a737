//! Seed derivation for independent, schedule-free random streams.
//!
//! Every random stream in the pipeline is keyed by a parent seed and a stream
//! identifier (tree index, forest index, repetition index, participant id), so
//! results do not depend on the order or thread in which work is executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every random stream in the crate.
pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for stream `stream` of `parent`.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ stream.rotate_left(17) ^ 0xA076_1D64_78BD_642F)
}

/// Child seed keyed by a string (participant ids).
pub fn derive_seed_str(parent: u64, key: &str) -> u64 {
    // FNV-1a: stable across platforms and toolchains, unlike `DefaultHasher`.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive_seed(parent, h)
}

pub fn stream_rng(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

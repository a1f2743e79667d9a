//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a ChaCha generator keyed by a seed
//! derived from `(master_seed, stream, index)`, so parallel or reordered work
//! reproduces the same samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named sub-streams so that, e.g., label draws and pixel noise for the same
/// sample never share a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Labels = 1,
    PixelNoise = 2,
    Split = 3,
    Init = 4,
    Shuffle = 5,
    Dropout = 6,
    Plant = 7,
    Reference = 8,
}

pub fn derive(master: u64, stream: Stream, index: u64) -> u64 {
    mix(mix(master ^ mix(stream as u64)) ^ index)
}

pub fn rng(master: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, stream, index))
}

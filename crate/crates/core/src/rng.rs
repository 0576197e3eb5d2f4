//! Deterministic random streams.
//!
//! Every episode owns a family of independent ChaCha streams keyed by
//! `(episode seed, stream tag)`, so enabling or disabling one noise source
//! never shifts the draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent randomness concerns inside an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Scatterers = 1,
    Calibration = 2,
    Cfo = 3,
    SampleNoise = 4,
    Bearing = 5,
    Initial = 6,
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of episode `index` within a batch started from `master_seed`.
pub fn episode_seed(master_seed: u64, index: u64) -> u64 {
    mix(mix(master_seed) ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03))
}

/// Sub-seed for one concern of an episode, usable wherever a plain seed is expected.
pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    mix(seed ^ mix(stream as u64))
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

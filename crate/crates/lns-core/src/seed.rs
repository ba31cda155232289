//! Seed derivation for reproducible sampling.
//!
//! Every sample in a dataset gets its own RNG stream, derived from the
//! dataset seed and the sample index through a splitmix-style mix. Samples
//! are therefore independent of generation order and of how work is split
//! across threads: sample `i` of seed `s` is the same bytes no matter what.

/// One splitmix64 scramble step.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream seed for one sample of one dataset.
pub fn derive_seed(dataset_seed: u64, sample_index: u64) -> u64 {
    mix(mix(dataset_seed) ^ mix(sample_index.wrapping_mul(0xA076_1D64_78BD_642F)))
}

/// Order-sensitive fingerprint of a byte stream (FNV-1a, 64-bit). Used to
/// compare generation runs without holding both outputs in memory.
pub fn fingerprint(bytes: &[u8]) -> u64 {
    let mut hash = 0xCBF2_9CE4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
    }
    hash
}

//! Stable seed derivation.
//!
//! Experiment reproducibility requires that derived seeds never change across
//! releases or platforms, so hashing is done with a fixed splitmix64 chain
//! rather than `std`'s unstable `DefaultHasher`.

/// One splitmix64 step.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a word into a seed.
pub fn mix(seed: u64, word: u64) -> u64 {
    splitmix64(seed ^ splitmix64(word))
}

/// Mixes a string (e.g. a dataset name or a role tag) into a seed.
pub fn mix_str(seed: u64, s: &str) -> u64 {
    let mut acc = splitmix64(seed ^ 0x5851_f42d_4c95_7f2d);
    for chunk in s.as_bytes().chunks(8) {
        let mut w = [0u8; 8];
        w[..chunk.len()].copy_from_slice(chunk);
        acc = mix(acc, u64::from_le_bytes(w));
    }
    mix(acc, s.len() as u64)
}

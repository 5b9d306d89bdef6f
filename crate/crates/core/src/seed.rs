//! Portable per-run seed derivation.
//!
//! `derive_seed(base, a, b)` folds each word into a SplitMix64 state:
//! `s = mix(s ^ word)`, starting from `s = mix(base)`. SplitMix64's finalizer
//! is `z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9; z = (z ^ (z >> 27)) *
//! 0x94d049bb133111eb; z ^ (z >> 31)` after adding the golden-ratio
//! increment `0x9e3779b97f4a7c15`.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, words: &[u64]) -> u64 {
    words.iter().fold(splitmix64(base), |s, &w| splitmix64(s ^ w))
}

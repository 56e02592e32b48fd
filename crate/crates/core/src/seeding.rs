//! Deterministic seed derivation.
//!
//! Every randomized component (kernel shot estimation, grid cells, SPSA
//! perturbations) derives child seeds from a base seed and a few integer
//! coordinates. Derivation goes through SplitMix64 rather than a hasher so
//! the stream is stable across Rust releases and platforms.

/// One round of the SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a base seed with integer coordinates into a child seed.
///
/// The result depends on the order of `parts`, so `mix(s, &[i, j])` and
/// `mix(s, &[j, i])` are distinct streams.
pub fn mix(seed: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

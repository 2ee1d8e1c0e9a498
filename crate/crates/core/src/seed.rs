//! Deterministic derivation of independent random streams from one master seed.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed for a named concern (e.g. `"fusion"`, `"workloads"`).
///
/// Streams for different tags are unrelated, so adding a consumer of randomness
/// never shifts the draws seen by another.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    mix64(master ^ mix64(fnv1a(tag)))
}

/// Seed for the `index`-th member of a stream family.
pub fn derive_indexed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

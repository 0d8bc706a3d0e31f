/// Golden-ratio increment used to spread consecutive indices.
const INDEX_MULTIPLIER: u64 = 0x9E37_79B9_7F4A_7C15;

/// Per-sample seed, stable across platforms and releases.
///
/// ```text
/// x = global_seed ^ index.wrapping_mul(0x9E3779B97F4A7C15)
/// x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9)
/// x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB)
/// x ^ (x >> 31)
/// ```
///
/// Both steps are bijections, so distinct indices never collide for a fixed
/// global seed.
pub fn derive_seed(global_seed: u64, index: u64) -> u64 {
    let mut x = global_seed ^ index.wrapping_mul(INDEX_MULTIPLIER);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

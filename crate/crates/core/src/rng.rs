//! All randomness flows from one per-run seed; consumers derive independent
//! streams by mixing a purpose tag through splitmix64, so results do not
//! depend on call order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub(crate) const TAG_TEST_VECTORS: u64 = 0x5456;
pub(crate) const TAG_CR_DRAW: u64 = 0x4352;
pub(crate) const TAG_CR_RECHECK: u64 = 0x524b;
pub(crate) const TAG_TWO_GRID: u64 = 0x5447;
pub(crate) const TAG_RHS: u64 = 0x5253;
pub(crate) const TAG_LEVEL: u64 = 0x4c56;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn derive(seed: u64, tag: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(tag)))
}

pub(crate) fn derive2(seed: u64, tag: u64, index: u64) -> u64 {
    derive(derive(seed, tag), index)
}

pub(crate) fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform entries in (-0.5, 0.5).
pub(crate) fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

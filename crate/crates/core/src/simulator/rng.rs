//! Per-replicate random streams.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream for replicate `index` under `master`. Depends only on the pair, so
/// replicate draws never depend on scheduling.
pub fn replicate_stream(master: u64, index: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(splitmix64(master ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d))))
}

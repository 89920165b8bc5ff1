//! Per-task random streams.
//!
//! Every Monte Carlo task `(tag, a, b)` (for instance `(SINGLE_SEED, node, run)`)
//! gets its own ChaCha8 generator whose 64-bit seed is a SplitMix64 hash of
//! the master seed and the task coordinates. A task's stream therefore never
//! depends on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SINGLE_SEED: u64 = 0x5349_525f_4f4e_45; // "SIR_ONE"
pub const MULTI_SEED: u64 = 0x5349_525f_4d55_4c; // "SIR_MUL"

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, tag: u64, a: u64, b: u64) -> u64 {
    let mut h = splitmix64(master);
    h = splitmix64(h ^ tag);
    h = splitmix64(h ^ a);
    splitmix64(h ^ b)
}

pub fn stream(master: u64, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, tag, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: u64 = stream(1, SINGLE_SEED, 3, 4).random();
        let b: u64 = stream(1, SINGLE_SEED, 3, 4).random();
        let c: u64 = stream(1, SINGLE_SEED, 4, 3).random();
        let d: u64 = stream(2, SINGLE_SEED, 3, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }
}

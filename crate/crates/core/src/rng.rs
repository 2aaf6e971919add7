//! Seed derivation and stream construction.
//!
//! All randomness in the crate flows through ChaCha8, a counter-based stream
//! cipher RNG whose output is identical across platforms for a given seed.
//! Experiment repeats use `seed XOR repeat-index`; sweep cells first hop the
//! base seed through splitmix64 so that (cell, repeat) pairs never collide.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-repeat stream seed.
pub fn repeat_seed(base: u64, repeat: u64) -> u64 {
    base ^ repeat
}

/// Independent base seed for a sweep cell.
pub fn cell_seed(base: u64, cell: u64) -> u64 {
    splitmix64(base ^ cell.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_deterministic() {
        let a: Vec<u64> = (0..8).map(|_| 0u64).scan(stream(42), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..8).map(|_| 0u64).scan(stream(42), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn cell_seeds_do_not_collide_with_repeat_xor() {
        // (cell 0, repeat 1) and (cell 1, repeat 0) must differ
        let a = repeat_seed(cell_seed(7, 0), 1);
        let b = repeat_seed(cell_seed(7, 1), 0);
        assert_ne!(a, b);
    }
}

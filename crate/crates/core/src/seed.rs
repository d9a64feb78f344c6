//! Deterministic seed derivation.
//!
//! Every random stream in the crate is a [`ChaCha8Rng`] seeded from a 64-bit
//! value. Child seeds are never drawn from a parent generator; they are
//! computed from `(master seed, purpose tag, index)` by [`derive_seed`], so the
//! seed a task receives does not depend on which thread runs it or in what
//! order tasks are scheduled.
//!
//! The mixing function is SplitMix64's finalizer applied to the master seed,
//! the 64-bit FNV-1a hash of the tag and the index, chained in that order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Derives the seed for the `index`-th task with purpose `tag` under `master`.
pub fn derive_seed(master: u64, tag: &str, index: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ fnv1a(tag));
    splitmix64(h ^ splitmix64(index))
}

/// The generator used for all sampling in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

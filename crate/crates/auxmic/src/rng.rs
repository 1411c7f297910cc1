//! Deterministic seeding.
//!
//! Every stochastic operation takes an explicit seed and runs a ChaCha8
//! stream, so a given (master seed, purpose, indices) tuple produces the
//! same samples on every platform and every run.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Splitmix64 step; used only to mix seed material, never as the stream.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed, a purpose tag, and indices.
pub fn derive_seed(master: u64, purpose: &str, indices: &[u64]) -> u64 {
    let mut state = master;
    let mut acc = splitmix64(&mut state);
    for &b in purpose.as_bytes() {
        state ^= u64::from(b);
        acc ^= splitmix64(&mut state);
    }
    for &i in indices {
        state ^= i;
        acc ^= splitmix64(&mut state);
    }
    acc
}

/// Counter-based stream RNG for all stochastic ops.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_seed_is_stable_and_sensitive() {
        let a = derive_seed(7, "noise", &[0, 1]);
        let b = derive_seed(7, "noise", &[0, 1]);
        assert_eq!(a, b);
        assert_ne!(a, derive_seed(7, "noise", &[0, 2]));
        assert_ne!(a, derive_seed(7, "speech", &[0, 1]));
        assert_ne!(a, derive_seed(8, "noise", &[0, 1]));
    }

    #[test]
    fn rng_streams_are_reproducible() {
        let mut r1 = rng_from_seed(42);
        let mut r2 = rng_from_seed(42);
        for _ in 0..16 {
            assert_eq!(r1.gen::<u64>(), r2.gen::<u64>());
        }
    }
}

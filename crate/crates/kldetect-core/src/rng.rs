//! Deterministic seeding helpers.
//!
//! Every random decision in the pipeline flows from an explicit 64-bit seed.
//! Per-account generators are derived as `hash(seed, user_id)` so that results
//! do not depend on scheduling order when accounts are processed in parallel.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// FNV-1a 64-bit hash. Stable across platforms and releases, unlike the
/// standard library's `DefaultHasher`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One step of the splitmix64 output function; used to spread seed material
/// over the full 256-bit ChaCha key.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator seeded directly from a master seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(expand_key(seed, 0))
}

/// Generator for one account: seeded from `hash(seed, user_id)` so per-account
/// streams are independent of iteration and scheduling order.
pub fn account_rng(seed: u64, user_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(expand_key(seed, fnv1a64(user_id.as_bytes())))
}

/// Generator for a derived stage (e.g. one CV fold) identified by an index.
pub fn derived_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(expand_key(seed, stream ^ 0x5851_f42d_4c95_7f2d))
}

/// Derives a child seed for a numbered stage.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut state = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    splitmix64(&mut state)
}

fn expand_key(seed: u64, salt: u64) -> [u8; 32] {
    let mut state = seed ^ salt.rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

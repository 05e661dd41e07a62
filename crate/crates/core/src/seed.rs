//! Deterministic seed derivation.
//!
//! One master seed per run fans out into independent named streams (network
//! init, environment, replay sampling, shuffling, ...). Subsystems can then
//! consume randomness at different rates without perturbing each other, which
//! is what makes the mode-degeneracy equivalences bit-exact.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stable 64-bit mix (splitmix64 finalizer).
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derive the seed for a named stream from the master seed.
///
/// The stream name is FNV-1a hashed and mixed into the master seed, so the
/// mapping is a pure function of `(master, name)` and independent of the
/// order in which streams are created.
pub fn derive_seed(master: u64, stream: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in stream.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    mix(master ^ h)
}

/// Seeded RNG for a named stream.
pub fn rng_for(master: u64, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream))
}

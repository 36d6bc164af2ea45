//! Seeded randomness.
//!
//! All stochastic routines take a `&mut QRng` supplied by the caller. The
//! generator is ChaCha8, seeded from a `u64`; parallel work units each get
//! their own stream derived from the same seed, so results do not depend on
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type QRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> QRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn derive_stream(seed: u64, stream: u64) -> QRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed drawn from the OS clock for runs where the caller did not pick one.
pub fn fresh_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    // splitmix64 finaliser to spread clock bits
    let mut z = (nanos as u64) ^ ((nanos >> 64) as u64);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Deterministic seed derivation for independent random streams.
//!
//! Every (run, step, element) triple gets its own generator seeded from a
//! hash of the master seed and the path, so results do not depend on the
//! order or the thread in which streams are consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream addressed by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = mix(master.wrapping_add(GOLDEN));
    for (depth, &p) in path.iter().enumerate() {
        state = mix(state ^ mix(p.wrapping_add(GOLDEN.wrapping_mul(depth as u64 + 2))));
    }
    state
}

pub fn stream(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

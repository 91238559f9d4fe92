//! Seed fan-out and stable hashing helpers.
//!
//! All randomness in the crate flows from a single root seed. Each component
//! draws from its own ChaCha stream so that adding or parallelizing one
//! consumer never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids for the components that consume randomness.
pub mod stream {
    pub const FOLDS: u64 = 1;
    pub const SVD: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
    pub const SYNTH: u64 = 4;
    /// Base id for per-fold streams: fold `i` uses `FOLD_BASE + i`.
    pub const FOLD_BASE: u64 = 1000;
}

/// RNG for `(seed, stream)`. Deterministic and independent across streams.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// FNV-1a, 64-bit. Stable across platforms and releases, unlike
/// `DefaultHasher`.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Order-independent hash of a token set, hex-encoded. Used to validate that
/// a serialized model is replayed against the vocabulary it was fitted on.
pub fn vocab_hash<'a>(tokens: impl IntoIterator<Item = &'a str>) -> String {
    let mut sorted: Vec<&str> = tokens.into_iter().collect();
    sorted.sort_unstable();
    sorted.dedup();
    let mut h: u64 = 0xcbf29ce484222325;
    for t in sorted {
        for &b in t.as_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h ^= 0x1f;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

//! Deterministic seed derivation and per-index random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream addressed by
//! `(seed, index)`, so results never depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Seed for a named sub-experiment: first 8 bytes of SHA-256 over the master
/// seed and a descriptor string.
pub fn derive_seed(master: u64, descriptor: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(descriptor.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Seed for the `index`-th child of `parent`.
pub fn child_seed(parent: u64, index: u64) -> u64 {
    derive_seed(parent, &format!("#{index}"))
}

/// Independent stream `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

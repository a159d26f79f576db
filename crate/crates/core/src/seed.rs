//! Seed derivation.
//!
//! Every random stage draws from a ChaCha8 stream seeded by
//! `derive_seed(top_seed, stage)`: the first eight bytes (little endian) of
//! SHA-256 over the top seed's little-endian bytes followed by the UTF-8 stage
//! name. Stage names are stable strings such as `"plan"` or
//! `"stability/trial/3"`, so re-running a single stage reproduces its draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(top: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(top.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// The generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

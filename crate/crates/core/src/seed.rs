//! Labeled seed splitting.
//!
//! Every behavior instance in a run draws from its own ChaCha stream. The stream
//! seed is the first eight bytes (little endian) of
//! `SHA-256(run_seed.to_le_bytes() || label)`, so streams are independent of the
//! order in which behaviors are instantiated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label))
}

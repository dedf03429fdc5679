//! Deterministic per-item random streams.
//!
//! Every identity, variant and augmentation draws from its own ChaCha8
//! stream whose seed is a SHA-256 digest of the global seed and a label
//! path. Output is therefore independent of scheduling order and of the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives a child seed from `seed` and an ordered list of labels.
pub fn derive_seed(seed: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(b"crease-stream-v1");
    h.update(seed.to_le_bytes());
    for label in labels {
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn derive_rng(seed: u64, labels: &[&str]) -> Rng {
    rng_from_seed(derive_seed(seed, labels))
}

/// Lower-case hex SHA-256 of a byte stream.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

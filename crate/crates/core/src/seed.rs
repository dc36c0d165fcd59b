//! Stable sub-seeds derived from a global seed and a label.

use sha2::{Digest, Sha256};

/// First eight bytes of `sha256(seed_le || label)`.
pub fn derive(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

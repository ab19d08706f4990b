//! Deterministic seed derivation for replicas and sub-streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Generator used everywhere randomness is consumed.
pub type Rng = ChaCha8Rng;

/// Derives a 64-bit seed from a root seed, a stream name and a replica index.
///
/// Streams with different names or indices are statistically independent for
/// all practical purposes; the mapping is stable across platforms.
pub fn derive_seed(root: u64, stream: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update((stream.len() as u64).to_le_bytes());
    h.update(stream.as_bytes());
    h.update(index.to_le_bytes());
    let digest = h.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

pub fn rng_for(root: u64, stream: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(root, stream, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn derivation_is_stable_and_separating() {
        assert_eq!(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
        assert_ne!(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
        // stream name and index cannot alias each other
        assert_ne!(derive_seed(1, "a1", 0), derive_seed(1, "a", 10));
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = rng_for(7, "x", 3);
        let mut b = rng_for(7, "x", 3);
        for _ in 0..10 {
            assert_eq!(a.random::<u64>(), b.random::<u64>());
        }
    }
}

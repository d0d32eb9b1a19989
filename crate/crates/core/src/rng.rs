//! Seeded draws with a fixed, version-independent consumption pattern.
//!
//! Transcripts must be byte-identical across builds, so bounded draws are
//! implemented here on top of the raw ChaCha20 stream instead of relying on a
//! sampling crate whose internals may change.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

/// Deterministic generator keyed by a 32-octet seed.
pub fn seeded(seed: [u8; 32]) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(seed)
}

/// Domain-separated child seed: `SHA-256(parent ‖ label ‖ index_be)`.
pub fn child_seed(parent: &[u8; 32], label: &[u8], index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(parent);
    h.update(label);
    h.update(index.to_be_bytes());
    h.finalize().into()
}

/// Uniform integer in `0..n` by rejection on the full 64-bit range.
///
/// Panics if `n == 0`.
pub fn below<R: RngCore>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0, "below(0)");
    let zone = (u64::MAX / n) * n;
    loop {
        let x = rng.next_u64();
        if x < zone {
            return x % n;
        }
    }
}

/// Bernoulli draw with exact rational probability `num/den`.
pub fn bernoulli<R: RngCore>(rng: &mut R, num: u64, den: u64) -> bool {
    below(rng, den) < num
}

/// In-place Fisher–Yates shuffle driven by [`below`].
pub fn shuffle<R: RngCore, T>(rng: &mut R, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        items.swap(i, j);
    }
}

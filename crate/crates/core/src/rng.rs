//! Deterministic, label-keyed random streams.
//!
//! Every source of randomness in this crate is an [`RngStream`] derived from a
//! 64-bit root seed and a textual label. The same `(seed, label)` pair always
//! produces the same draw sequence, independent of thread scheduling, and
//! distinct labels produce statistically independent streams. There is no
//! ambient global RNG.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// A named, reproducible random stream.
///
/// Streams are single-owner: instead of sharing one stream across concurrent
/// tasks, derive a child stream per task with [`RngStream::child`].
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    label: String,
    rng: ChaCha12Rng,
}

/// Derives the stream keyed by `(root_seed, label)`.
pub fn derive_stream(root_seed: u64, label: &str) -> RngStream {
    RngStream::derive(root_seed, label)
}

impl RngStream {
    /// Derives the stream keyed by `(root_seed, label)`.
    ///
    /// The ChaCha key is a SHA-256 digest of the seed bytes and the label, so
    /// differently-labeled streams share no state.
    pub fn derive(root_seed: u64, label: &str) -> Self {
        assert!(!label.is_empty(), "stream label must be non-empty");
        let mut hasher = Sha256::new();
        hasher.update(root_seed.to_le_bytes());
        hasher.update([0u8]);
        hasher.update(label.as_bytes());
        let key: [u8; 32] = hasher.finalize().into();
        Self {
            seed: root_seed,
            label: label.to_owned(),
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    /// Child stream labeled `"<parent label>/<suffix>"`.
    ///
    /// Independent of the parent's position: deriving a child does not consume
    /// or depend on the parent's draws.
    pub fn child(&self, suffix: &str) -> Self {
        Self::derive(self.seed, &format!("{}/{}", self.label, suffix))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

//! Seeded randomness.
//!
//! Every randomized routine takes an explicit `&mut impl Rng`. Independent
//! streams are derived from a root seed and a label so that adding a new
//! consumer never perturbs existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha12Rng;

pub fn derive_key(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"cenizk/rng/v1");
    h.update(seed.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

/// A 64-bit child seed, for APIs that take a `u64` seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let k = derive_key(seed, label);
    u64::from_le_bytes(k[..8].try_into().unwrap())
}

pub fn stream(seed: u64, label: &str) -> StreamRng {
    StreamRng::from_seed(derive_key(seed, label))
}

/// Stream for trial number `index` of an experiment.
pub fn trial_stream(seed: u64, label: &str, index: u64) -> StreamRng {
    stream(derive_seed(seed, label), &format!("trial/{index}"))
}

//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose key is
//! `(seed, domain, index)`. Two draws that share a seed but differ in domain or
//! index never share a stream, so results do not depend on evaluation order or
//! on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose tag mixed into the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Split = 1,
    JitterQuantile = 2,
    JitterCdf = 3,
    Predict = 4,
    Synthetic = 5,
    TrainTest = 6,
    Folds = 7,
    Replication = 8,
    Evaluation = 9,
    Attribute = 10,
    Unlabeled = 11,
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Derives a child seed, e.g. one per Monte-Carlo replication.
pub fn derive_seed(seed: u64, domain: Domain, index: u64) -> u64 {
    stream(seed, domain, index).random()
}

/// A draw from `U([-width, width])`.
#[inline]
pub fn jitter<R: Rng + ?Sized>(rng: &mut R, width: f64) -> f64 {
    if width == 0.0 {
        return 0.0;
    }
    width * (2.0 * rng.random::<f64>() - 1.0)
}

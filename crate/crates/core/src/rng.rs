//! Seeded random streams.
//!
//! Every random draw in the crate goes through [`stream`], which is ChaCha8
//! keyed by a 64-bit seed. ChaCha is counter based and its output is fixed by
//! the algorithm, so identical seeds give identical streams on every
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn stream(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed for one sample of a batch. Depends only on the batch seed and the
/// sample index, never on scheduling.
pub fn sample_seed(seed: u64, index: u64) -> u64 {
    seed ^ index
}

//! Seed derivation for reproducible, independent PRNG streams.
//!
//! A run owns one master seed. Every consumer (weight init, each epoch,
//! each probe repeat) gets its own ChaCha stream keyed by a purpose tag and
//! an index, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream purposes. Values are part of the reproducibility contract.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Init = 1,
    Epoch = 2,
    Probe = 3,
    SbmEdges = 4,
    SbmFeatures = 5,
}

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Independent stream `index` of `purpose` under `seed`.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) ^ index);
    rng
}

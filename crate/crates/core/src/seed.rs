//! Deterministic sub-stream derivation.
//!
//! Every random stream in a study is a ChaCha8 generator seeded from a hash
//! of the master seed and a path of integer labels (method, dimension,
//! replication, purpose). Streams are therefore independent of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes `labels` into `seed`. Order matters.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(seed), |acc, &label| splitmix(acc ^ splitmix(label)))
}

/// Stable 64-bit FNV-1a hash, used to turn method names into labels.
pub fn label(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn stream(seed: u64, labels: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive(seed, labels))
}

/// Purposes of the per-replication streams.
pub mod purpose {
    pub const COVARIATES: u64 = 1;
    pub const SAMPLER: u64 = 2;
    pub const NOISE: u64 = 3;
    pub const REFERENCE: u64 = 4;
    pub const POWER: u64 = 5;
    pub const BOOTSTRAP: u64 = 6;
}

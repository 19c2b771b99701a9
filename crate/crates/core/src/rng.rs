//! Seed hierarchy.
//!
//! Every random draw in a run comes from a ChaCha stream whose seed is a
//! pure function of the master seed and a path of integers (purpose tag,
//! iteration, member id, ...). Streams therefore do not depend on execution
//! order, so parallel and sequential runs produce identical results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Purpose tags used as the first path component.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const CV: u64 = 3;
    pub const SELECT: u64 = 4;
    pub const MUTATE: u64 = 5;
    pub const FINAL: u64 = 6;
    pub const DATA: u64 = 7;
    pub const SPLIT: u64 = 8;
    pub const TRIAL: u64 = 9;
    pub const HYPER: u64 = 10;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn substream(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, path))
}

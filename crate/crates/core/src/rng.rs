//! Seed derivation. Every run owns two ChaCha8 streams derived from one 64-bit seed: stream 0
//! drives arrivals and stream 1 drives search directions, so changing how many directions are
//! drawn never shifts the arrival sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ARRIVAL_STREAM: u64 = 0;
const DIRECTION_STREAM: u64 = 1;

#[derive(Debug, Clone)]
pub struct RunStreams {
    pub seed: u64,
    pub arrivals: ChaCha8Rng,
    pub directions: ChaCha8Rng,
}

impl RunStreams {
    pub fn new(seed: u64) -> Self {
        let mut arrivals = ChaCha8Rng::seed_from_u64(seed);
        arrivals.set_stream(ARRIVAL_STREAM);
        let mut directions = ChaCha8Rng::seed_from_u64(seed);
        directions.set_stream(DIRECTION_STREAM);
        Self { seed, arrivals, directions }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep` at horizon index `horizon_index` of a sweep.
pub fn derive_seed(base: u64, horizon_index: usize, rep: usize) -> u64 {
    splitmix(splitmix(splitmix(base) ^ horizon_index as u64) ^ rep as u64)
}

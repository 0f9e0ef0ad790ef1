//! Seeded random streams. Everything stochastic in the crate draws from a
//! ChaCha8 generator so runs are reproducible across platforms.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids used by the pipeline; kept in one place so they never collide.
pub mod streams {
    pub const TRAIN_DATA: u64 = 1;
    pub const TEST_DATA: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const NETWORK: u64 = 4;
    /// Layer `l` of a network initializes from stream `INIT + l`.
    pub const INIT: u64 = 64;
}

//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha8 stream derived from a
//! user seed and a fixed stream id, so runs are reproducible bit-for-bit and
//! independent components never share generator state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids. Each consumer owns one; per-entity streams are offset from it.
pub mod stream {
    pub const WEIGHTS: u64 = 1;
    pub const UL_SELECTION: u64 = 2;
    pub const SYNC_SELECTION: u64 = 3;
    pub const WORLD: u64 = 4;
    pub const TIC_EXPLORATION: u64 = 5;
    pub const PTR_INSTANCE: u64 = 6;
    pub const TOPOLOGY: u64 = 7;
    /// Per-sensor traffic streams start here: `SENSOR_BASE + sensor_id`.
    pub const SENSOR_BASE: u64 = 1 << 32;
}

pub fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

//! Seeded, splittable random streams.
//!
//! A run is identified by a `u64` seed. Independent consumers inside one run
//! draw from distinct ChaCha8 streams keyed by the same seed, so results do
//! not depend on the order in which components are generated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream used for OU paths of lane 0. Lane `l` uses `2l` (OU) and `2l + 1` (traffic).
pub const OU_STREAM: u64 = 0;
pub const TRAFFIC_STREAM: u64 = 1;

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// OU stream of a synthesis lane.
pub fn ou_stream(seed: u64, lane: u64) -> ChaCha8Rng {
    stream(seed, 2 * lane + OU_STREAM)
}

/// Traffic stream of a synthesis lane.
pub fn traffic_stream(seed: u64, lane: u64) -> ChaCha8Rng {
    stream(seed, 2 * lane + TRAFFIC_STREAM)
}

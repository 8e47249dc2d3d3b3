//! Seeded random streams.
//!
//! All randomness in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`)
//! keyed by a 64-bit seed and a 64-bit stream id. The generator is portable,
//! so golden values derived from a seed are identical on every platform.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

/// Stream ids used by the training and evaluation pipelines.
pub mod streams {
    pub const PARAM_INIT: u64 = 1;
    pub const TRAIN_DATA: u64 = 2;
    pub const TEST_DATA: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const MISREPORT_INIT: u64 = 5;
    pub const MISREPORT_SAMPLES: u64 = 6;
    pub const EVAL_RESTARTS: u64 = 7;
    pub const BASELINE: u64 = 8;
}

/// A generator for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A generator for one indexed draw inside a stream family.
///
/// Used where a value must depend only on `(seed, family, index)`, e.g. the
/// initial misreport of training profile `index`.
pub fn indexed(seed: u64, family: u64, index: u64) -> StreamRng {
    let mixed = splitmix(seed ^ splitmix(family.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    let mut rng = StreamRng::seed_from_u64(mixed);
    rng.set_stream(index);
    rng
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

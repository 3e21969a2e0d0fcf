//! Counter-based random streams.
//!
//! Every random quantity is drawn from a ChaCha8 stream whose key depends on
//! (master seed, generation) and whose stream id depends on (sample index,
//! purpose). Results therefore do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Noise = 0,
    Terms = 1,
    Indices = 2,
    Boundary = 3,
    Init = 4,
    Shuffle = 5,
    Aux = 6,
    Cross = 7,
}

const PURPOSES: u64 = 8;

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mix two words into one; order matters.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b).rotate_left(17))
}

/// Derive a child seed, e.g. for one generation or one replica.
pub fn derive(seed: u64, tag: u64) -> u64 {
    mix(seed, tag.wrapping_add(0x5851_F42D_4C95_7F2D))
}

/// Stream for sample `index` and `purpose` under key `key`.
pub fn stream(key: u64, index: u64, purpose: Purpose) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(index.wrapping_mul(PURPOSES).wrapping_add(purpose as u64));
    rng
}

/// Key for generation `generation` of a run seeded with `seed`.
pub fn generation_key(seed: u64, generation: u64) -> u64 {
    mix(seed, generation)
}

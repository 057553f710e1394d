//! Seeded random streams.
//!
//! Every stochastic component draws from a ChaCha8 generator whose 64-bit
//! stream id is derived from a list of integer keys (chain index, grid index,
//! candidate index, ...). Results therefore do not depend on how work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `seed` on the stream identified by `keys`.
pub fn stream(seed: u64, keys: &[u64]) -> Rng {
    let mut id = 0x5bd1_e995_u64;
    for &k in keys {
        id = splitmix(id ^ splitmix(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

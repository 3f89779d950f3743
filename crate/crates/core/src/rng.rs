//! Deterministic random substreams.
//!
//! Every independent task (shutter segment, sweep row, pixel) draws from its
//! own ChaCha8 stream selected by `(seed, key...)`, so results do not depend
//! on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// RNG for the task identified by `key` under the run seed `seed`.
pub fn substream(seed: u64, key: &[u64]) -> SimRng {
    let stream = key
        .iter()
        .fold(0x6a09_e667_f3bc_c908u64, |acc, &k| splitmix64(acc ^ k));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

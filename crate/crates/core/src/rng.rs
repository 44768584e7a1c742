//! Stateless derivation of reproducible random streams.
//!
//! A stream is identified by a master seed and a key path such as
//! `[row, trial]`. The same identifiers always yield the same stream, no
//! matter which worker draws from it or in which order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream for `key` under `master_seed`.
pub fn stream(master_seed: u64, key: &[u64]) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let id = key
        .iter()
        .fold(0x6A09_E667_F3BC_C908u64, |acc, &k| splitmix64(acc ^ splitmix64(k)));
    rng.set_stream(id);
    rng
}

//! Counter-based, seed-splittable random streams.
//!
//! Every random object is drawn from `stream(seed, label, index)`: a ChaCha8
//! generator keyed by the master seed, with its stream id set from the label and
//! the index. Two different `(label, index)` paths never share a stream, so work
//! can be split across threads without changing results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// FNV-1a hash of a path label.
pub fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for `(seed, label, index)`.
pub fn stream(seed: u64, label: &str, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ label_hash(label)));
    rng.set_stream(splitmix(label_hash(label) ^ splitmix(index)));
    rng
}

/// Derives a child seed, for handing a sub-task its own master seed.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix(splitmix(seed ^ label_hash(label)) ^ index)
}

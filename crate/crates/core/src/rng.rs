//! Reproducible random streams.
//!
//! Every replicate of every experiment draws from its own ChaCha8 stream keyed
//! by `(master_seed, experiment_id, replicate)`, so results do not depend on
//! how replicates are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 64-bit stream key for one replicate of one experiment.
pub fn stream_seed(master_seed: u64, experiment: &str, replicate: u64) -> u64 {
    let a = splitmix(master_seed);
    let b = splitmix(a ^ fnv1a(experiment.as_bytes()));
    splitmix(b ^ replicate.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn stream(master_seed: u64, experiment: &str, replicate: u64) -> Stream {
    Stream::seed_from_u64(stream_seed(master_seed, experiment, replicate))
}

pub fn from_seed(seed: u64) -> Stream {
    Stream::seed_from_u64(seed)
}

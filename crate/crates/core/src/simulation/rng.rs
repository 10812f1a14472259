//! Per-replicate random streams. Each replicate gets its own ChaCha8
//! generator keyed by a hash of (master seed, stream, grid index, replicate
//! index), so results do not depend on the order replicates are run in.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Simulated observations.
pub const STREAM_DATA: u64 = 0;
/// Logistic approximation-rate replicates.
pub const STREAM_CONVERGENCE: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replicate_rng(seed: u64, stream: u64, grid: usize, replicate: usize) -> ChaCha8Rng {
    let mut words = [0u64; 4];
    let mut h = splitmix64(seed);
    for (k, input) in [stream, grid as u64, replicate as u64, 0x5EED].into_iter().enumerate() {
        h = splitmix64(h ^ splitmix64(input.wrapping_add(k as u64)));
        words[k] = h;
    }
    let mut key = [0u8; 32];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

//! Per-replica random streams.
//!
//! Every replica draws from ChaCha with 8 rounds keyed by the run seed
//! (little-endian in the first 8 key bytes, the rest zero) on stream number
//! equal to the replica index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in run metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), key = seed LE || 0^24, stream = replica";

pub fn replica_rng(seed: u64, replica: u32) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(u64::from(replica));
    rng
}

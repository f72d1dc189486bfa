//! Counter-based random streams for reproducible parallel simulation.
//!
//! A stream is addressed by `(seed, partition, stream id)`: the first two
//! select a ChaCha8 key, the stream id selects the ChaCha nonce, and the
//! draw index is the ChaCha block counter. Any trial can therefore be
//! regenerated in isolation, independent of how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes two 64-bit values into one (used to derive per-point seeds).
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut s = a ^ b.rotate_left(32) ^ 0x6a09_e667_f3bc_c908;
    splitmix64(&mut s);
    splitmix64(&mut s)
}

/// Key material for one `(seed, partition)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    key: [u8; 32],
}

impl StreamKey {
    pub fn new(seed: u64, partition: u64) -> Self {
        let mut state = seed ^ partition.wrapping_mul(0xd1b5_4a32_d192_ed03);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        StreamKey { key }
    }

    /// The random stream with the given id, positioned at draw 0.
    pub fn stream(&self, stream_id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(stream_id);
        rng
    }
}

//! Counter-based stream splitting.
//!
//! Every work unit draws from its own ChaCha8 stream, addressed by a key
//! derived from the master seed and a chain of tags, plus a 64-bit stream
//! index. Draw sequences therefore never depend on how work is scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Factory for independent, reproducible random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFactory {
    key: [u64; 4],
}

impl StreamFactory {
    pub fn new(master_seed: u64) -> Self {
        let mut s = master_seed;
        StreamFactory {
            key: [
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
                splitmix64(&mut s),
            ],
        }
    }

    /// Child factory keyed on a textual task kind.
    pub fn derive(&self, tag: &str) -> Self {
        self.derive_index(fnv1a(tag.as_bytes()))
    }

    /// Child factory keyed on an integer task index.
    pub fn derive_index(&self, index: u64) -> Self {
        let mut s = self.key[0] ^ self.key[1].rotate_left(17) ^ self.key[2].rotate_left(31)
            ^ self.key[3].rotate_left(47)
            ^ index.wrapping_mul(0xd605_bbb5_8c8a_bbf5);
        let mut key = [0u64; 4];
        for (k, old) in key.iter_mut().zip(self.key.iter()) {
            *k = splitmix64(&mut s) ^ old.rotate_left(7);
        }
        StreamFactory { key }
    }

    /// The stream for work unit `index`.
    pub fn stream(&self, index: u64) -> Stream {
        let mut seed = [0u8; 32];
        for (chunk, k) in seed.chunks_exact_mut(8).zip(self.key.iter()) {
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}

//! Seeded, splittable random streams.
//!
//! Every analysis derives its randomness from a single root seed through
//! named substreams, and each replicate gets its own split. Reruns with the
//! same seed are bit-identical regardless of how work is scheduled.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A deterministic random stream with a recorded derivation key.
///
/// Streams are cheap to clone; a clone replays the same sequence. Use
/// [`RandomStream::substream`] for independent named streams and
/// [`RandomStream::split`] for per-replicate streams.
#[derive(Clone, Debug)]
pub struct RandomStream {
    key: u64,
    rng: ChaCha8Rng,
}

/// splitmix64 finalizer; decorrelates derived keys.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl RandomStream {
    /// Root stream for a run.
    pub fn from_seed(seed: u64) -> Self {
        let key = mix(seed);
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    /// Independent stream for a named analysis stage.
    pub fn substream(&self, label: &str) -> Self {
        let key = mix(self.key ^ fnv1a(label));
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    /// Independent stream for replicate `index`.
    pub fn split(&self, index: u64) -> Self {
        let key = mix(self.key.wrapping_add(0x5851_f42d_4c95_7f2d).wrapping_mul(mix(index.wrapping_add(1))));
        Self {
            key,
            rng: ChaCha8Rng::seed_from_u64(key),
        }
    }

    /// Derivation key, recorded in reports for reproducibility.
    pub fn key(&self) -> u64 {
        self.key
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }
}

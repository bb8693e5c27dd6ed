//! Reproducible random streams.
//!
//! Every particle gets its own ChaCha8 stream keyed by the master seed and
//! selected by the particle index, so a growth is a pure function of
//! `(n, seed)` no matter how trials are scheduled across threads.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream derivation key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub particle_index: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, particle_index: u64) -> Self {
        RngStream {
            master_seed,
            particle_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.particle_index);
        rng
    }
}

/// Seed for trial `index` of an experiment with seed `master`
/// (SplitMix64 finaliser over the pair).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform directions two bits at a time.
pub struct DirectionBits<R> {
    rng: R,
    word: u64,
    left: u32,
}

impl<R: RngCore> DirectionBits<R> {
    pub fn new(rng: R) -> Self {
        DirectionBits {
            rng,
            word: 0,
            left: 0,
        }
    }

    #[inline]
    pub fn next_dir(&mut self) -> usize {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 32;
        }
        let d = (self.word & 3) as usize;
        self.word >>= 2;
        self.left -= 1;
        d
    }

    /// Raw access for draws that need a full word.
    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

/// Uniform double in `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64<R: RngCore>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

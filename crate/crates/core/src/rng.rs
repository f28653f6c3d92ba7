//! Seeded random streams.
//!
//! Every randomized operation takes an explicit [`RngStream`]; there is no
//! global generator. A stream is identified by a 64-bit seed and a stream
//! index, and ChaCha8 gives the same sequence for the same pair on every
//! platform. Helpers avoid `usize`-typed sampling so results do not depend
//! on pointer width.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n as u64) as usize
    }

    pub fn coin(&mut self) -> bool {
        self.rng.next_u64() >> 63 == 1
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Mixes a master seed with a path of indices into a child seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    let mut state = master;
    for &part in path {
        state = splitmix(state ^ splitmix(part.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

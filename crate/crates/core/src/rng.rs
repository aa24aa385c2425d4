//! Seeded random streams shared by the environment, the local scorer and the
//! remote scoring service.
//!
//! A stream is identified by `(seed, stream_id)`. Its SplitMix64 state starts at
//! `seed ^ (stream_id * 0x9E3779B97F4A7C15)`. Uniforms are mapped to (0, 1] as
//! `((x >> 11) + 0.5) * 2^-53` and normals use Box–Muller
//! `sqrt(-2 ln u1) * cos(2 pi u2)`, consuming `u1` then `u2` and discarding the
//! sine partner. Any runtime reproducing these three rules reproduces every
//! score drawn by this crate.

use serde::{Deserialize, Serialize};

/// Version tag of the stream contract, echoed by the remote scoring service.
pub const RNG_VERSION: &str = "splitmix64-boxmuller-v1";

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn from_state(state: u64) -> Self {
        Self { state }
    }

    pub fn from_stream(stream: StreamId) -> Self {
        Self::from_state(stream.seed ^ stream.id.wrapping_mul(GOLDEN_GAMMA))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in (0, 1]; only the largest mantissa rounds to exactly 1.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
    }

    /// Uniform draw in `[lo, hi]`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal draw via Box–Muller (cosine branch only).
    #[inline]
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p || p >= 1.0
    }

    /// Uniform index in `0..n`. `n` must be non-zero.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

/// Address of one deterministic stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub id: u64,
}

impl StreamId {
    pub fn new(seed: u64, id: u64) -> Self {
        Self { seed, id }
    }

    pub fn rng(self) -> SplitMix64 {
        SplitMix64::from_stream(self)
    }
}

/// Reserved stream ids inside one episode. Scoring streams are handed out
/// sequentially starting at [`StreamAllocator::FIRST_SCORE_STREAM`].
pub mod streams {
    pub const ENVIRONMENT: u64 = 1;
    pub const OUTCOME: u64 = 2;
    pub const CONTROLLER: u64 = 3;
    pub const COMPLETION: u64 = 4;
}

/// Hands out fresh scoring streams for one episode in call order.
#[derive(Debug, Clone)]
pub struct StreamAllocator {
    seed: u64,
    next: u64,
}

impl StreamAllocator {
    pub const FIRST_SCORE_STREAM: u64 = 1 << 32;

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            next: Self::FIRST_SCORE_STREAM,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn reserved(&self, id: u64) -> StreamId {
        StreamId::new(self.seed, id)
    }

    pub fn next_stream(&mut self) -> StreamId {
        let id = self.next;
        self.next += 1;
        StreamId::new(self.seed, id)
    }
}

/// Derives the seed of replication `rep` from a base seed.
pub fn derive_seed(base: u64, rep: u64) -> u64 {
    SplitMix64::from_state(base ^ rep.wrapping_mul(0xD1B5_4A32_D192_ED03)).next_u64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_sequence() {
        let mut rng = SplitMix64::from_stream(StreamId::new(42, 0));
        assert_eq!(rng.next_u64(), 13679457532755275413);
        assert_eq!(rng.next_u64(), 2949826092126892291);
    }

    #[test]
    fn uniform_range() {
        let mut lo = SplitMix64::from_state(0);
        assert!(((0u64 >> 11) as f64 + 0.5) * TWO_POW_NEG_53 > 0.0);
        assert_eq!(((u64::MAX >> 11) as f64 + 0.5) * TWO_POW_NEG_53, 1.0);
        assert!((((u64::MAX - (1 << 11)) >> 11) as f64 + 0.5) * TWO_POW_NEG_53 < 1.0);
        for _ in 0..10_000 {
            let u = lo.uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn normal_moments() {
        let mut rng = SplitMix64::from_stream(StreamId::new(7, 3));
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn allocator_is_sequential_and_distinct_from_reserved() {
        let mut alloc = StreamAllocator::new(9);
        let a = alloc.next_stream();
        let b = alloc.next_stream();
        assert_eq!(b.id, a.id + 1);
        assert!(a.id > streams::COMPLETION);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = SplitMix64::from_state(5);
        let mut v: Vec<usize> = (0..17).collect();
        rng.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..17).collect::<Vec<_>>());
    }
}

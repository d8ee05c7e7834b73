//! Counter-based splittable random streams.
//!
//! A stream is identified by a 64-bit key derived from the run seed and a
//! path of words (for example `[MEASURE, k, i, j]`); its `n`-th output is a
//! SplitMix64 finalization of `key + n·φ64`. Streams for different paths are
//! independent of each other and of the order in which they are consumed, so
//! every draw of a simulation is reproducible in isolation.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Path word for initial-position sampling.
pub const TAG_INITIAL: u64 = 0x494e_4954;
/// Path word for measurement sampling.
pub const TAG_MEASURE: u64 = 0x4d45_4153;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix(seed ^ 0x6A09_E667_F3BC_C909),
            counter: 0,
        }
    }

    /// Stream at `path` below `seed`.
    pub fn stream(seed: u64, path: &[u64]) -> Self {
        path.iter().fold(Self::new(seed), |rng, &w| rng.split(w))
    }

    /// Child stream labelled `word`; does not advance `self`.
    pub fn split(&self, word: u64) -> Self {
        Self {
            key: mix(self.key ^ mix(word.wrapping_add(GOLDEN))),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

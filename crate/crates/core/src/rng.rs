//! Counter-based splittable random streams.
//!
//! Every output is a pure function of `(key, counter)`, so a stream can be
//! recreated from its seed at any time and child streams with distinct
//! indices are independent by construction. Parallel workers therefore get
//! non-overlapping streams deterministically: sample `i` of a Monte Carlo run
//! always uses `master.child(i)` no matter which worker processes it.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const CHILD_SALT: u64 = 0x6a09_e667_f3bc_c909;

/// SplitMix64 finalizer; full-avalanche 64-bit mix.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A counter-based pseudorandom stream.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Stream {
            key: mix(seed.wrapping_add(GOLDEN)),
            counter: 0,
        }
    }

    /// Derive an independent child stream. Distinct indices give distinct
    /// keys; the child starts at counter zero.
    pub fn child(&self, index: u64) -> Self {
        Stream {
            key: mix(self.key ^ mix(index.wrapping_mul(GOLDEN) ^ CHILD_SALT)),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(c.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN))
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in the open interval `(0, 1)`; safe as a quantile-function
    /// argument.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

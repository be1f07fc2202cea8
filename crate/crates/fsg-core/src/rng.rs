//! Seeded pseudorandom generator with a fixed, documented state transition.
//!
//! Every consumer that needs reproducible randomness (the allocator
//! simulator, corpus seed derivation, test data generation) goes through
//! this generator so that a given seed produces the same sequence on every
//! platform and in every implementation of the same rules.
//!
//! The state transition is splitmix64:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! all arithmetic modulo 2^64.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Next 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Next value uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Next value uniform in `[0, bound)`. `bound` must be nonzero.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        self.next_u64() % bound
    }
}

/// Derives the seed for corpus member `index` from a base seed.
///
/// `mix_seed(base, i) = splitmix64_output(base XOR (i + 1) * GAMMA)`,
/// i.e. one splitmix64 step taken from a state offset by the index.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    SplitMix64::new(base ^ index.wrapping_add(1).wrapping_mul(GAMMA)).next_u64()
}

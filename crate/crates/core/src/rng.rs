//! Deterministic 64-bit generator used for pairing plans and pair sampling.
//!
//! Plans and sampled diagnostics must reproduce bit-identically across runs,
//! platforms, and implementations, so the generator is part of the external
//! contract rather than an implementation detail. This is SplitMix64 (Steele,
//! Lea, Vigna): a single 64-bit counter state advanced by the golden-ratio
//! increment, with a two-round mix applied to each output.

/// SplitMix64 generator with the fixed published constants.
///
/// `state' = state + 0x9E3779B97F4A7C15`, output = mix of `state'` where
/// `mix(z) = h(g(z))`, `g(z) = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9`,
/// `h(z) = (z ^ (z >> 27)) * 0x94D049BB133111EB`, final `z ^ (z >> 31)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Next 64-bit output.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Index draw in `0..n` by modulo reduction. `n` must be nonzero.
    ///
    /// The modulo bias is irrelevant here: draws only need to be deterministic
    /// and well spread, not exactly uniform.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Uniform float in [0, 1) from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform float in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

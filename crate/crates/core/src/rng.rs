//! Deterministic pseudo-random streams.
//!
//! Every operation that samples takes an explicit seed or an explicit
//! [`Rng`], so reruns with the same configuration are bit-identical on any
//! platform. The generator is xoshiro256++ seeded through SplitMix64; both
//! are public-domain algorithms with well-studied statistical quality.

/// SplitMix64 step. Used to expand seeds and to derive independent
/// sub-stream seeds from a parent seed.
#[inline]
pub fn split_mix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a stable sub-seed from a parent seed and a stream index.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    let mut s = parent ^ stream.wrapping_mul(0xa076_1d64_78bd_642f);
    split_mix64(&mut s)
}

/// xoshiro256++ generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: [u64; 4],
}

impl Rng {
    /// Creates a generator from a 64-bit seed via SplitMix64 expansion.
    pub fn seed_from(seed: u64) -> Self {
        let mut s = seed;
        let state = [
            split_mix64(&mut s),
            split_mix64(&mut s),
            split_mix64(&mut s),
            split_mix64(&mut s),
        ];
        Rng { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0].wrapping_add(s[3]).rotate_left(23).wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform f64 in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform f64 in [lo, hi).
    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Unbiased uniform integer in [0, n). Panics if n == 0.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below() requires n > 0");
        let n = n as u64;
        // Widening-multiply method with rejection of the biased zone.
        let threshold = n.wrapping_neg() % n;
        loop {
            let r = self.next_u64();
            let wide = (r as u128) * (n as u128);
            if (wide as u64) >= threshold {
                return (wide >> 64) as usize;
            }
        }
    }

    /// Fisher-Yates shuffle in place.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    /// Splits off an independent child stream.
    pub fn fork(&mut self) -> Rng {
        Rng::seed_from(self.next_u64())
    }
}

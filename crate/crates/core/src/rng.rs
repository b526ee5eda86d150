//! Deterministic seeding.
//!
//! Every random object in this crate is produced by [`SplitMix64`], and every
//! independent stream (trial seeds, fixture sampling, ...) is derived from a
//! root seed by the counter-based [`derive_stream`] mixer.  Streams derived
//! this way can be consumed in any order — or in parallel — and still merge
//! into byte-identical results.

/// SplitMix64 (Vigna / Steele et al.): a 64-bit state marched by the golden
/// gamma, with an avalanching output mix.  Tiny, portable, and plenty good
/// for sampling hash coefficients and subsets.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The output mixing function of SplitMix64.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `index`-th derived stream of `root`.
///
/// This is exactly the `index`-th output of SplitMix64 seeded with `root`,
/// computed in O(1): `mix64(root + (index + 1) * gamma)`.
#[inline]
pub fn derive_stream(root: u64, index: u64) -> u64 {
    mix64(root.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform value in `[0, bound)` by rejection on the top bits.
    /// `bound` must be nonzero.
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        if bound.is_power_of_two() {
            return self.next_u64() & (bound - 1);
        }
        // Lemire-style rejection without bias.
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            let (hi, lo) = {
                let wide = (r as u128) * (bound as u128);
                ((wide >> 64) as u64, wide as u64)
            };
            if lo >= threshold {
                return hi;
            }
        }
    }

    /// Uniform double in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_stream_matches_sequential_outputs() {
        let root = 0xDEAD_BEEF_CAFE_F00D;
        let mut rng = SplitMix64::new(root);
        for i in 0..32 {
            assert_eq!(derive_stream(root, i), rng.next_u64(), "stream {i}");
        }
    }

    #[test]
    fn next_below_is_in_range_and_deterministic() {
        let mut a = SplitMix64::new(7);
        let mut b = SplitMix64::new(7);
        for bound in [1u64, 2, 3, 10, 1 << 20, u64::MAX] {
            for _ in 0..100 {
                let x = a.next_below(bound);
                assert!(x < bound);
                assert_eq!(x, b.next_below(bound));
            }
        }
    }

    #[test]
    fn next_f64_unit_interval() {
        let mut rng = SplitMix64::new(42);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }
}

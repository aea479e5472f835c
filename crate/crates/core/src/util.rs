//! Small deterministic helpers shared across modules and tests.

/// SplitMix64 generator. Used everywhere randomness is needed so that
/// scenario runs and test fixtures are reproducible bit-for-bit, with no
/// dependency on external RNG crates whose streams may change.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn next_range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform in [0, bound).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        debug_assert!(bound > 0);
        self.next_u64() % bound
    }
}

/// Deterministic pseudo-embedding for a work item: hashes (seed, item, lane)
/// into coordinates in [-1, 1). Stands in for a real embedding model in
/// scenarios and tests.
pub fn hash_embedding(seed: u64, item: u64, dim: usize) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed ^ item.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    (0..dim).map(|_| rng.next_range_f64(-1.0, 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_is_deterministic() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn next_f64_in_unit_interval() {
        let mut rng = SplitMix64::new(1);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn hash_embedding_stable_and_sized() {
        let e1 = hash_embedding(7, 3, 8);
        let e2 = hash_embedding(7, 3, 8);
        assert_eq!(e1, e2);
        assert_eq!(e1.len(), 8);
        assert_ne!(e1, hash_embedding(7, 4, 8));
    }
}

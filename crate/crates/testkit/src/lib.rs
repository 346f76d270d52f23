//! Reference computations for the contcat test suites.
//!
//! Nothing in here depends on `contcat`: every routine is an independent
//! route to a quantity the library computes, so agreement between the two is
//! evidence rather than tautology.
//!
//! - [`hp`]: fixed-point big-integer arithmetic evaluating the alternating
//!   closed-form sum for the normalizer, with random node perturbation so
//!   that ties are never hit exactly.
//! - [`quad`]: adaptive Gauss-Kronrod quadrature, nested over the simplex.
//! - [`stats`]: two-sample Kolmogorov-Smirnov, exact binomial tests and
//!   summary helpers.

pub mod hp;
pub mod quad;
pub mod stats;

/// SplitMix64, used to generate reproducible test inputs without pulling a
/// full RNG stack into the oracle crate.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on [0, 1) with 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Uniform point on the probability simplex with `k` components.
    pub fn simplex(&mut self, k: usize) -> Vec<f64> {
        let e: Vec<f64> = (0..k).map(|_| -(1.0 - self.next_f64()).ln()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }
}

/// Relative difference `|a - b| / |b|`, or the absolute difference when `b`
/// is exactly zero.
pub fn rel_err(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        (a - b).abs()
    } else {
        ((a - b) / b).abs()
    }
}

//! High-precision evaluation of the alternating closed-form sum
//!
//! ```text
//! exp[z_1, ..., z_n] = sum_k exp(z_k) / prod_{i != k} (z_k - z_i)
//! ```
//!
//! in binary fixed point with `FRAC_BITS` fractional bits. Node differences
//! and their products are exact big integers; only the exponentials and one
//! final division per term are rounded, each to `2^-FRAC_BITS`. Every node
//! is nudged by an independent random offset of order `2^-PERTURB_BITS` so
//! coincident nodes never produce a zero denominator; the perturbation moves
//! the result by a relative amount of the same order, far below `f64`
//! resolution.

use num_bigint::{BigInt, Sign};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::SplitMix64;

pub const FRAC_BITS: u64 = 1536;
const PERTURB_BITS: u64 = 160;
const GUARD_BITS: u64 = 128;

/// Exact fixed-point image of a finite `f64` (truncated below `2^-FRAC_BITS`).
pub fn fixed_from_f64(x: f64) -> BigInt {
    assert!(x.is_finite(), "non-finite node {x}");
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exponent) = if exp_bits == 0 {
        (frac, -1074i64)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let mut v = BigInt::from(mantissa);
    let shift = exponent + FRAC_BITS as i64;
    if shift >= 0 {
        v <<= shift as u64;
    } else {
        v >>= (-shift) as u64;
    }
    if negative {
        -v
    } else {
        v
    }
}

/// `exp(x)` for a fixed-point `x`, returned in the same format.
pub fn fixed_exp(x: &BigInt) -> BigInt {
    let work = FRAC_BITS + GUARD_BITS;
    let one = BigInt::one() << work;
    let int_bits = (x.abs() >> FRAC_BITS).bits();
    let halvings = int_bits + 24;
    // y = x / 2^halvings at scale 2^work; exact because of the guard bits.
    let y: BigInt = (x << GUARD_BITS) >> halvings;

    let mut sum = one.clone();
    let mut term = one;
    let mut j = 1u32;
    loop {
        term = (&term * &y) >> work;
        term /= j;
        if term.is_zero() {
            break;
        }
        sum += &term;
        j += 1;
    }
    for _ in 0..halvings {
        sum = (&sum * &sum) >> work;
    }
    sum >> GUARD_BITS
}

/// Natural log of `v / 2^scale_bits` for a positive big integer `v`.
pub fn ln_scaled(v: &BigInt, scale_bits: u64) -> f64 {
    assert_eq!(v.sign(), Sign::Plus, "logarithm of a non-positive value");
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top = (v >> shift).to_f64().expect("64-bit head fits in f64");
    top.ln() + (shift as f64 - scale_bits as f64) * std::f64::consts::LN_2
}

/// `ln exp[z_1, ..., z_n]` by the closed-form sum at high precision.
///
/// `seed` drives the node perturbation; different seeds must agree to far
/// better than double precision.
pub fn ln_exp_divided_difference(nodes: &[f64], seed: u64) -> f64 {
    assert!(!nodes.is_empty());
    let mut rng = SplitMix64::new(seed);
    let top = nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let top_fixed = fixed_from_f64(top);
    let z: Vec<BigInt> = nodes
        .iter()
        .map(|&x| {
            let jitter_bits = FRAC_BITS - PERTURB_BITS;
            let mut jitter = BigInt::zero();
            // 128 random bits placed just below 2^-PERTURB_BITS.
            for _ in 0..2 {
                jitter = (jitter << 64u32) + BigInt::from(rng.next_u64());
            }
            let jitter = jitter << (jitter_bits - 128);
            let jitter = if rng.next_u64() & 1 == 1 {
                -jitter
            } else {
                jitter
            };
            fixed_from_f64(x) - &top_fixed + jitter
        })
        .collect();

    let n = z.len();
    let mut total = BigInt::zero();
    for k in 0..n {
        let mut denom = BigInt::one();
        for i in 0..n {
            if i != k {
                denom *= &z[k] - &z[i];
            }
        }
        let numer = fixed_exp(&z[k]) << ((n as u64 - 1) * FRAC_BITS);
        total += numer / denom;
    }
    top + ln_scaled(&total, FRAC_BITS)
}

/// `ln C(eta)` for the nodes `(eta_1, ..., eta_{K-1}, 0)`.
pub fn ln_normalizer(eta: &[f64], seed: u64) -> f64 {
    let mut nodes = eta.to_vec();
    nodes.push(0.0);
    -ln_exp_divided_difference(&nodes, seed)
}

//! Parameterizations of the continuous categorical family and the simplex
//! points it lives on.
//!
//! A distribution over `K` categories is described either by its mean-type
//! parameter `lambda` (strictly positive, summing to one; the density is
//! proportional to `prod_i lambda_i^{x_i}`) or by its natural parameter
//! `eta_i = log(lambda_i / lambda_K)` for `i < K`, with `eta_K` pinned to
//! zero and never stored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|sum - 1|` accepted (and then renormalized away) when
/// constructing simplex-valued inputs.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Negative components no smaller than this are treated as round-off and
/// clipped to zero.
pub const NEGATIVE_CLIP: f64 = 1e-12;

/// Mean-type parameter `lambda`: `K >= 2` strictly positive entries summing
/// to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanParams {
    lambda: Vec<f64>,
}

impl MeanParams {
    /// Validates `lambda`. Sums within [`SUM_TOLERANCE`] of one are
    /// renormalized exactly; zero components are rejected because the
    /// matching natural parameter would be infinite.
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        check_positive(&lambda, "lambda")?;
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self::normalized(lambda, sum))
    }

    /// Builds `lambda` from arbitrary positive weights by normalizing them.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        check_positive(&weights, "weight")?;
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() {
            return Err(Error::InvalidArgument("weights overflow".into()));
        }
        Ok(Self::normalized(weights, sum))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k >= 2, "need at least two categories");
        Self {
            lambda: vec![1.0 / k as f64; k],
        }
    }

    fn normalized(mut lambda: Vec<f64>, sum: f64) -> Self {
        for v in &mut lambda {
            *v /= sum;
        }
        Self { lambda }
    }

    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn to_natural(&self) -> NaturalParams {
        mean_to_natural(self)
    }
}

fn check_positive(values: &[f64], what: &'static str) -> Result<()> {
    if values.len() < 2 {
        return Err(Error::TooFewComponents {
            min: 2,
            got: values.len(),
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { what, index, value });
        }
        if value <= 0.0 {
            return Err(Error::NonPositive { what, index, value });
        }
    }
    Ok(())
}

/// Natural parameter `eta` in `R^{K-1}`; the last coordinate `eta_K = 0` is
/// implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalParams {
    eta: Vec<f64>,
}

impl NaturalParams {
    pub fn new(eta: Vec<f64>) -> Result<Self> {
        if eta.is_empty() {
            return Err(Error::TooFewComponents { min: 1, got: 0 });
        }
        for (index, &value) in eta.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what: "eta",
                    index,
                    value,
                });
            }
        }
        Ok(Self { eta })
    }

    /// The uniform distribution over `k` categories.
    pub fn zeros(k: usize) -> Self {
        assert!(k >= 2, "need at least two categories");
        Self {
            eta: vec![0.0; k - 1],
        }
    }

    /// Number of categories `K` (one more than the stored length).
    pub fn k(&self) -> usize {
        self.eta.len() + 1
    }

    /// Free coordinates `eta_1..eta_{K-1}`.
    pub fn as_slice(&self) -> &[f64] {
        &self.eta
    }

    /// All `K` coordinates, with the trailing implicit zero.
    pub fn full(&self) -> Vec<f64> {
        let mut nodes = Vec::with_capacity(self.k());
        nodes.extend_from_slice(&self.eta);
        nodes.push(0.0);
        nodes
    }

    pub fn to_mean(&self) -> MeanParams {
        natural_to_mean(self)
    }
}

/// `eta_i = log lambda_i - log lambda_K`.
pub fn mean_to_natural(lambda: &MeanParams) -> NaturalParams {
    let l = lambda.as_slice();
    let last = l[l.len() - 1].ln();
    NaturalParams {
        eta: l[..l.len() - 1].iter().map(|v| v.ln() - last).collect(),
    }
}

/// Softmax of `(eta_1, ..., eta_{K-1}, 0)`, shifted by the maximum so that
/// large coordinates cannot overflow.
pub fn natural_to_mean(eta: &NaturalParams) -> MeanParams {
    let full = eta.full();
    let top = full.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = full.iter().map(|v| (v - top).exp()).collect();
    let sum: f64 = weights.iter().sum();
    // Entries can underflow to zero for extreme eta; keep them strictly
    // positive so the result is a valid parameter.
    let lambda = weights
        .into_iter()
        .map(|w| (w / sum).max(f64::MIN_POSITIVE))
        .collect();
    MeanParams { lambda }
}

/// A point of the closed simplex: `K >= 2` nonnegative components summing to
/// one. Zeros are valid data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint {
    x: Vec<f64>,
}

impl SimplexPoint {
    /// Validates `x`: components in `[-NEGATIVE_CLIP, 0)` are clipped to
    /// zero, sums within [`SUM_TOLERANCE`] of one are renormalized, anything
    /// further off is an error.
    pub fn new(mut x: Vec<f64>) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::TooFewComponents {
                min: 2,
                got: x.len(),
            });
        }
        for (index, v) in x.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "x",
                    index,
                    value: *v,
                });
            }
            if *v < 0.0 {
                if *v >= -NEGATIVE_CLIP {
                    *v = 0.0;
                } else {
                    return Err(Error::NegativeComponent { index, value: *v });
                }
            }
        }
        let sum: f64 = x.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        if sum != 1.0 {
            for v in &mut x {
                *v /= sum;
            }
        }
        Ok(Self { x })
    }

    /// Builds a point from its first `K-1` coordinates, which must be
    /// nonnegative with sum at most one; the last is the remainder.
    pub(crate) fn from_free(mut free: Vec<f64>) -> Self {
        let s: f64 = free.iter().sum();
        free.push((1.0 - s).max(0.0));
        Self { x: free }
    }

    /// Wraps components the caller has already made valid.
    pub(crate) fn from_full_unchecked(x: Vec<f64>) -> Self {
        debug_assert!(x.iter().all(|v| *v >= 0.0));
        Self { x }
    }

    /// The vertex `e_j` of the `k`-simplex.
    pub fn vertex(k: usize, j: usize) -> Self {
        assert!(j < k && k >= 2);
        let mut x = vec![0.0; k];
        x[j] = 1.0;
        Self { x }
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.x
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.x
    }
}

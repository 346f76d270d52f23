//! The normalizing constant `C(eta)`.
//!
//! `1 / C(eta)` is the integral of `exp(eta . x)` over the simplex, which
//! equals the divided difference of `exp` over the `K` nodes
//! `(eta_1, ..., eta_{K-1}, 0)`. The literal alternating sum for that
//! divided difference is kept in [`literal_log_normalizer`] for comparison;
//! it cancels catastrophically when nodes cluster and is undefined at ties.

use crate::divdiff::log_exp_divided_difference;
use crate::params::{MeanParams, NaturalParams};

/// `log C(eta)` together with the node data it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct LogNormalizer {
    log_c: f64,
    nodes: Vec<f64>,
    center: f64,
}

impl LogNormalizer {
    /// `log C(eta)`.
    pub fn value(&self) -> f64 {
        self.log_c
    }

    /// `C(eta)` itself; may overflow or underflow for extreme parameters.
    pub fn constant(&self) -> f64 {
        self.log_c.exp()
    }

    /// The `K` nodes `(eta_1, ..., eta_{K-1}, 0)` minus [`Self::center`].
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// The shift subtracted from the nodes (their maximum).
    pub fn center(&self) -> f64 {
        self.center
    }
}

/// `log C(eta)`; finite for every finite `eta`, ties included.
pub fn log_normalizer(eta: &NaturalParams) -> LogNormalizer {
    let full = eta.full();
    let center = full.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_c = -log_exp_divided_difference(&full);
    LogNormalizer {
        log_c,
        nodes: full.iter().map(|z| z - center).collect(),
        center,
    }
}

/// `log C_lambda`, the log normalizer of `prod_i lambda_i^{x_i}`.
///
/// Computed directly as the divided difference of `exp` over the nodes
/// `log lambda_i`; equals `log C(eta) - log lambda_K`.
pub fn log_normalizer_lambda(lambda: &MeanParams) -> f64 {
    let nodes: Vec<f64> = lambda.as_slice().iter().map(|l| l.ln()).collect();
    -log_exp_divided_difference(&nodes)
}

/// `log C(eta)` from the textbook alternating sum
/// `sum_k e^{z_k} / prod_{i != k} (z_k - z_i)`.
///
/// Reference only: returns NaN or infinities when nodes coincide or the sum
/// cancels to a non-positive value.
pub fn literal_log_normalizer(eta: &NaturalParams) -> f64 {
    let z = eta.full();
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (k, &zk) in z.iter().enumerate() {
        let mut denom = 1.0;
        for (i, &zi) in z.iter().enumerate() {
            if i != k {
                denom *= zk - zi;
            }
        }
        sum += (zk - top).exp() / denom;
    }
    -(top + sum.ln())
}

/// `log(eta / (e^eta - 1))`, the log normalizer of the continuous Bernoulli
/// with natural parameter `eta`; zero at `eta = 0`.
pub fn log_cb_normalizer(eta: f64) -> f64 {
    let a = eta.abs();
    if a < 1e-4 {
        // log(eta / expm1(eta)) = -eta/2 + eta^2/24 - eta^4/2880 + ...
        let e2 = eta * eta;
        -0.5 * eta + e2 / 24.0 - e2 * e2 / 2880.0
    } else if eta > 0.0 {
        eta.ln() - eta - (-(-eta).exp()).ln_1p()
    } else {
        (eta / eta.exp_m1()).ln()
    }
}

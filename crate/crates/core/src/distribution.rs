//! Density, moments, KL divergence, moment generating function and mode.
//!
//! Moments come from confluent divided differences. Writing
//! `D(z) = exp[z_1, ..., z_K]` for the nodes `z = (eta, 0)`, differentiating
//! with respect to one node repeats it:
//!
//! ```text
//! E[x_i]         = exp[z, z_i] / D
//! E[x_i x_j]     = exp[z, z_i, z_j] / D        (i != j)
//! E[x_i^2]       = 2 exp[z, z_i, z_i] / D
//! ```

use nalgebra::DMatrix;

use crate::divdiff::log_exp_divided_difference;
use crate::error::{Error, Result};
use crate::normalizer::{log_normalizer, log_normalizer_lambda};
use crate::params::{MeanParams, NaturalParams, SimplexPoint};

fn check_same_k(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// `log p(x | eta) = log C(eta) + sum_{i<K} eta_i x_i`; finite on the whole
/// closed simplex, vertices included.
pub fn log_pdf(x: &SimplexPoint, eta: &NaturalParams) -> Result<f64> {
    check_same_k(eta.k(), x.k())?;
    Ok(log_normalizer(eta).value() + dot(eta.as_slice(), x.as_slice()))
}

/// `log C_lambda + sum_i x_i log lambda_i`, the density in its mean-type
/// parameterization. Invariant under relabeling categories of `x` and
/// `lambda` together.
pub fn log_pdf_lambda(x: &SimplexPoint, lambda: &MeanParams) -> Result<f64> {
    check_same_k(lambda.k(), x.k())?;
    let linear: f64 = x
        .as_slice()
        .iter()
        .zip(lambda.as_slice())
        .map(|(xi, li)| if *xi == 0.0 { 0.0 } else { xi * li.ln() })
        .sum();
    Ok(log_normalizer_lambda(lambda) + linear)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn with_repeats(nodes: &[f64], repeats: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len() + repeats.len());
    out.extend_from_slice(nodes);
    out.extend(repeats.iter().map(|&i| nodes[i]));
    out
}

fn free_means(nodes: &[f64], log_d: f64) -> Vec<f64> {
    (0..nodes.len() - 1)
        .map(|i| (log_exp_divided_difference(&with_repeats(nodes, &[i])) - log_d).exp())
        .collect()
}

/// Full `K`-vector of component means; the last entry is one minus the sum
/// of the others.
pub fn mean(eta: &NaturalParams) -> Vec<f64> {
    log_normalizer_and_mean(eta).1
}

/// `log C(eta)` and the full mean vector from one shared normalizer
/// evaluation.
pub(crate) fn log_normalizer_and_mean(eta: &NaturalParams) -> (f64, Vec<f64>) {
    let nodes = eta.full();
    let log_d = log_exp_divided_difference(&nodes);
    let mut m = free_means(&nodes, log_d);
    let last = 1.0 - m.iter().sum::<f64>();
    m.push(last);
    (-log_d, m)
}

/// Covariance of the free coordinates `x_1..x_{K-1}`, a symmetric positive
/// definite `(K-1) x (K-1)` matrix.
pub fn covariance(eta: &NaturalParams) -> DMatrix<f64> {
    let nodes = eta.full();
    let d = nodes.len() - 1;
    let log_d = log_exp_divided_difference(&nodes);
    let m = free_means(&nodes, log_d);
    let mut cov = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let second = log_exp_divided_difference(&with_repeats(&nodes, &[i, j])) - log_d;
            let moment = if i == j {
                2.0 * second.exp()
            } else {
                second.exp()
            };
            let c = moment - m[i] * m[j];
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    cov
}

/// `KL(p || q)` for `p = CC(eta_p)`, `q = CC(eta_q)`.
pub fn kl_divergence(eta_p: &NaturalParams, eta_q: &NaturalParams) -> Result<f64> {
    check_same_k(eta_p.k(), eta_q.k())?;
    if eta_p == eta_q {
        return Ok(0.0);
    }
    let m = mean(eta_p);
    let diff: f64 = eta_p
        .as_slice()
        .iter()
        .zip(eta_q.as_slice())
        .zip(&m)
        .map(|((a, b), mi)| (a - b) * mi)
        .sum();
    let kl = log_normalizer(eta_p).value() - log_normalizer(eta_q).value() + diff;
    Ok(kl.max(0.0))
}

/// `log E[exp(t . x)] = log C(eta) - log C(eta + t)`.
pub fn log_mgf(eta: &NaturalParams, t: &[f64]) -> Result<f64> {
    check_same_k(eta.k() - 1, t.len())?;
    let shifted: Vec<f64> = eta.as_slice().iter().zip(t).map(|(e, ti)| e + ti).collect();
    let shifted = NaturalParams::new(shifted)?;
    Ok(log_normalizer(eta).value() - log_normalizer(&shifted).value())
}

/// `E[exp(t . x)]`.
pub fn mgf(eta: &NaturalParams, t: &[f64]) -> Result<f64> {
    log_mgf(eta, t).map(f64::exp)
}

/// The mode: the vertex at the unique largest `lambda_j`. Ties are an error
/// listing the tied indices.
pub fn mode(lambda: &MeanParams) -> Result<SimplexPoint> {
    let l = lambda.as_slice();
    let top = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = l
        .iter()
        .enumerate()
        .filter(|(_, v)| top - **v <= 4.0 * f64::EPSILON * top)
        .map(|(i, _)| i)
        .collect();
    if tied.len() > 1 {
        return Err(Error::ModeTie { indices: tied });
    }
    Ok(SimplexPoint::vertex(l.len(), tied[0]))
}

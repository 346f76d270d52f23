//! Maximum likelihood for a single distribution.
//!
//! The average log-likelihood `log C(eta) + eta . xbar` is concave with
//! gradient `xbar - E[x]` and Hessian `-Cov[x]`, so Newton's method with a
//! backtracking line search converges from `eta = 0`. At the optimum the
//! fitted mean equals the sample mean.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::distribution::{covariance, mean};
use crate::error::{Error, Result};
use crate::normalizer::log_normalizer;
use crate::params::NaturalParams;

/// Averages with a component below this are on the boundary.
pub const BOUNDARY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub log_likelihood: f64,
    pub grad_norm: f64,
}

/// Outcome of an iterative fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport<P> {
    pub params: P,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Infinity norm of the gradient at `params`.
    pub grad_norm: f64,
    pub converged: bool,
    /// One entry per iterate, starting with the initial point. The
    /// log-likelihood never decreases by more than rounding error.
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleConfig {
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iter: 500,
        }
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn avg_loglik(eta: &NaturalParams, xbar: &[f64]) -> f64 {
    let lin: f64 = eta.as_slice().iter().zip(xbar).map(|(e, x)| e * x).sum();
    log_normalizer(eta).value() + lin
}

/// `xbar - E[x]` over all `K` components; its first `K - 1` entries are the
/// gradient in `eta`.
fn residual(eta: &NaturalParams, xbar: &[f64]) -> Vec<f64> {
    xbar.iter().zip(mean(eta)).map(|(x, m)| x - m).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Fits `eta` to a dataset; `log_likelihood` is the total over all rows.
pub fn fit_mle(data: &Dataset) -> Result<FitReport<NaturalParams>> {
    fit_mle_with(data, &MleConfig::default())
}

pub fn fit_mle_with(data: &Dataset, cfg: &MleConfig) -> Result<FitReport<NaturalParams>> {
    let mut report = fit_mean(&data.mean(), cfg)?;
    let n = data.len() as f64;
    report.log_likelihood *= n;
    for t in &mut report.trace {
        t.log_likelihood *= n;
    }
    Ok(report)
}

/// Fits `eta` to a sample average `xbar`. Log-likelihoods in the report are
/// per observation.
pub fn fit_mean(xbar: &[f64], cfg: &MleConfig) -> Result<FitReport<NaturalParams>> {
    if xbar.len() < 2 {
        return Err(Error::TooFewComponents {
            min: 2,
            got: xbar.len(),
        });
    }
    let zeros: Vec<usize> = xbar
        .iter()
        .enumerate()
        .filter(|(_, v)| **v < BOUNDARY_THRESHOLD)
        .map(|(i, _)| i)
        .collect();
    if !zeros.is_empty() {
        return Err(Error::BoundaryAverage { components: zeros });
    }
    let d = xbar.len() - 1;
    let mut eta = NaturalParams::zeros(xbar.len());
    let mut ll = avg_loglik(&eta, xbar);
    let mut res = residual(&eta, xbar);
    let mut gnorm = inf_norm(&res);
    let mut trace = vec![TraceEntry {
        log_likelihood: ll,
        grad_norm: gnorm,
    }];
    let mut iterations = 0;

    while gnorm > cfg.tolerance && iterations < cfg.max_iter {
        iterations += 1;
        let g = DVector::from_column_slice(&res[..d]);
        let cov = covariance(&eta);
        let step = match cov.cholesky() {
            Some(ch) => ch.solve(&g),
            // Numerically singular covariance: fall back to the gradient.
            None => g.clone(),
        };
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = eta
                .as_slice()
                .iter()
                .zip(step.iter())
                .map(|(e, s)| e + t * s)
                .collect();
            if let Ok(cand) = NaturalParams::new(cand) {
                let cand_ll = avg_loglik(&cand, xbar);
                if cand_ll >= ll + ARMIJO * t * slope {
                    let r = residual(&cand, xbar);
                    accepted = Some((cand, cand_ll, r));
                    break;
                }
                // Near the optimum the objective stops resolving the
                // improvement; take the step if it is flat within rounding
                // and reduces the gradient.
                let flat = cand_ll >= ll - 4.0 * f64::EPSILON * ll.abs().max(1.0);
                if flat {
                    let r = residual(&cand, xbar);
                    if inf_norm(&r) < gnorm {
                        accepted = Some((cand, cand_ll, r));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((cand, cand_ll, r)) = accepted else {
            break;
        };
        eta = cand;
        ll = cand_ll;
        res = r;
        gnorm = inf_norm(&res);
        trace.push(TraceEntry {
            log_likelihood: ll,
            grad_norm: gnorm,
        });
    }

    Ok(FitReport {
        params: eta,
        log_likelihood: ll,
        iterations,
        grad_norm: gnorm,
        converged: gnorm <= cfg.tolerance,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::SimplexPoint;

    fn data(rows: &[&[f64]]) -> Dataset {
        Dataset::new(
            rows.iter()
                .map(|r| SimplexPoint::new(r.to_vec()).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn uniform_point_gives_zero() {
        let third = 1.0 / 3.0;
        let r = fit_mle(&data(&[&[third, third, third]])).unwrap();
        assert!(r.converged);
        assert!(r.params.as_slice().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn single_interior_point_is_matched() {
        let r = fit_mle(&data(&[&[0.2, 0.3, 0.5]])).unwrap();
        assert!(r.converged);
        assert!(r.log_likelihood.is_finite());
        for (m, x) in mean(&r.params).iter().zip([0.2, 0.3, 0.5]) {
            assert!((m - x).abs() <= 1e-8);
        }
        for w in r.trace.windows(2) {
            let slack = 4.0 * f64::EPSILON * w[0].log_likelihood.abs().max(1.0);
            assert!(w[1].log_likelihood >= w[0].log_likelihood - slack);
        }
    }

    #[test]
    fn boundary_average_is_an_error() {
        let err = fit_mle(&data(&[&[0.5, 0.0, 0.5], &[0.1, 0.0, 0.9]])).unwrap_err();
        match err {
            Error::BoundaryAverage { components } => assert_eq!(components, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn skewed_average() {
        let xbar = [1e-4, 0.3, 0.6999];
        let r = fit_mean(&xbar, &MleConfig::default()).unwrap();
        assert!(r.converged, "{r:?}");
        for (m, x) in mean(&r.params).iter().zip(xbar) {
            assert!((m - x).abs() <= 1e-8);
        }
    }
}

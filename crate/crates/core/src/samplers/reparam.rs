//! Pathwise (reparameterization) derivatives of naive-sampler draws.
//!
//! An accepted naive draw is `x_i = F^{-1}(u_i; eta_i)` for the retained
//! uniforms `u`. Acceptance only looks at `sum x_i <= 1`, so holding `u`
//! fixed and moving the parameters gives an unbiased pathwise derivative
//! with no correction term.

use nalgebra::DMatrix;
use rand::Rng;

use super::naive::Naive;
use super::{budget_error, check_n, draw_one, SampleBatch, SamplerOptions};
use crate::cb::{cb_inverse_cdf_deta, cb_inverse_cdf_natural};
use crate::error::{Error, Result};
use crate::params::{MeanParams, SimplexPoint};

/// Naive-sampler draws together with the uniforms that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ReparamBatch {
    pub batch: SampleBatch,
    /// `uniforms[s]` holds the `K - 1` accepted uniforms of draw `s`.
    pub uniforms: Vec<Vec<f64>>,
}

pub fn reparam_sample<R: Rng + ?Sized>(
    lambda: &MeanParams,
    n: usize,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<ReparamBatch> {
    check_n(n)?;
    let eta = lambda.to_natural();
    let mut sampler = Naive::new(&eta);
    let mut points = Vec::with_capacity(n);
    let mut proposals = Vec::with_capacity(n);
    let mut uniforms = Vec::with_capacity(n);
    for _ in 0..n {
        match draw_one(&mut sampler, rng, opts.budget) {
            (Some(x), used) => {
                points.push(x);
                proposals.push(used);
                uniforms.push(sampler.u.clone());
            }
            (None, _) => return Err(budget_error("naive", opts.budget, &eta)),
        }
    }
    Ok(ReparamBatch {
        batch: SampleBatch {
            points,
            proposals,
            seed: None,
        },
        uniforms,
    })
}

fn check_uniforms(lambda: &MeanParams, u: &[f64]) -> Result<()> {
    if u.len() + 1 != lambda.k() {
        return Err(Error::DimensionMismatch {
            expected: lambda.k() - 1,
            got: u.len(),
        });
    }
    Ok(())
}

/// The deterministic map `u -> x`; reproduces [`reparam_sample`] output
/// bit for bit.
pub fn reparam_transform(lambda: &MeanParams, u: &[f64]) -> Result<SimplexPoint> {
    check_uniforms(lambda, u)?;
    let eta = lambda.to_natural();
    let free = u
        .iter()
        .zip(eta.as_slice())
        .map(|(&ui, &e)| cb_inverse_cdf_natural(ui, e))
        .collect();
    Ok(SimplexPoint::from_free(free))
}

/// `d x_i / d lambda_j` at fixed `u`, a `(K - 1) x K` matrix.
///
/// The entries of `lambda` are treated as free positive weights (the map
/// only depends on their ratios), so the columns are not projected onto the
/// simplex tangent space.
pub fn reparam_jacobian(lambda: &MeanParams, u: &[f64]) -> Result<DMatrix<f64>> {
    check_uniforms(lambda, u)?;
    let l = lambda.as_slice();
    let k = l.len();
    let eta = lambda.to_natural();
    let mut jac = DMatrix::zeros(k - 1, k);
    for (i, (&ui, &e)) in u.iter().zip(eta.as_slice()).enumerate() {
        let dx = cb_inverse_cdf_deta(ui, e);
        jac[(i, i)] = dx / l[i];
        jac[(i, k - 1)] = -dx / l[k - 1];
    }
    Ok(jac)
}

use rand::Rng;

use super::{run, Proposal, SampleBatch, SamplerOptions};
use crate::cb::cb_inverse_cdf_natural;
use crate::error::Result;
use crate::params::{NaturalParams, SimplexPoint};

/// Independent continuous Bernoulli proposals for `x_1..x_{K-1}`, rejected
/// when they leave the simplex.
pub(crate) struct Naive<'a> {
    eta: &'a [f64],
    /// Uniforms of the latest proposal, kept for reparameterization.
    pub(crate) u: Vec<f64>,
    x: Vec<f64>,
}

impl<'a> Naive<'a> {
    pub(crate) fn new(eta: &'a NaturalParams) -> Self {
        let d = eta.as_slice().len();
        Self {
            eta: eta.as_slice(),
            u: vec![0.0; d],
            x: vec![0.0; d],
        }
    }
}

impl Proposal for Naive<'_> {
    const NAME: &'static str = "naive";

    #[inline]
    fn attempt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<SimplexPoint> {
        for u in &mut self.u {
            *u = rng.gen::<f64>();
        }
        let mut sum = 0.0;
        for ((x, &u), &e) in self.x.iter_mut().zip(&self.u).zip(self.eta) {
            *x = cb_inverse_cdf_natural(u, e);
            sum += *x;
        }
        (sum <= 1.0).then(|| SimplexPoint::from_free(self.x.clone()))
    }
}

/// Draws `n` points by independent proposals with acceptance when they land
/// in the simplex. Acceptance decays factorially in `K`.
pub fn sample_naive<R: Rng + ?Sized>(
    eta: &NaturalParams,
    n: usize,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    run(&mut Naive::new(eta), eta, n, rng, opts)
}

use rand::Rng;

use super::{run, Proposal, SampleBatch, SamplerOptions};
use crate::cb::cb_inverse_cdf_natural;
use crate::error::Result;
use crate::params::{NaturalParams, SimplexPoint};

/// Naive proposals with the largest-`lambda` category as the implicit
/// remainder, the other components drawn in decreasing-`lambda` order, and
/// early rejection once their running sum passes one.
///
/// Early rejection skips inverse-CDF evaluations but never uniforms: each
/// proposal consumes exactly `K - 1` of them.
pub(crate) struct Ordered {
    /// Category index of each drawn component, in drawing order.
    order: Vec<usize>,
    /// Natural parameter of each drawn component relative to the pivot.
    eta: Vec<f64>,
    pivot: usize,
    u: Vec<f64>,
    x: Vec<f64>,
}

impl Ordered {
    pub(crate) fn new(eta: &NaturalParams, reorder: bool) -> Self {
        let full = eta.full();
        let k = full.len();
        let (pivot, order) = if reorder {
            let mut idx: Vec<usize> = (0..k).collect();
            // Stable sort keeps ties in index order.
            idx.sort_by(|&a, &b| full[b].total_cmp(&full[a]));
            (idx[0], idx[1..].to_vec())
        } else {
            (k - 1, (0..k - 1).collect())
        };
        let rel = order.iter().map(|&i| full[i] - full[pivot]).collect();
        Self {
            order,
            eta: rel,
            pivot,
            u: vec![0.0; k - 1],
            x: vec![0.0; k],
        }
    }
}

impl Proposal for Ordered {
    const NAME: &'static str = "ordered";

    #[inline]
    fn attempt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<SimplexPoint> {
        for u in &mut self.u {
            *u = rng.gen::<f64>();
        }
        let mut sum = 0.0;
        for ((&i, &u), &e) in self.order.iter().zip(&self.u).zip(&self.eta) {
            let xi = cb_inverse_cdf_natural(u, e);
            sum += xi;
            if sum > 1.0 {
                return None;
            }
            self.x[i] = xi;
        }
        self.x[self.pivot] = (1.0 - sum).max(0.0);
        Some(SimplexPoint::from_full_unchecked(self.x.clone()))
    }
}

/// Draws `n` points with the ordered sampler. Close to rejection-free when
/// one category dominates, and never less efficient than the naive sampler.
pub fn sample_ordered<R: Rng + ?Sized>(
    eta: &NaturalParams,
    n: usize,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    run(&mut Ordered::new(eta, opts.reorder), eta, n, rng, opts)
}

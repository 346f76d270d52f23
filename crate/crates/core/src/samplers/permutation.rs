use rand::Rng;

use super::{run, Proposal, SampleBatch, SamplerOptions};
use crate::cb::cb_inverse_cdf_natural;
use crate::error::Result;
use crate::params::{NaturalParams, SimplexPoint};

/// Natural parameters in cumulative coordinates.
///
/// With `y = B x` (prefix sums of `x_1..x_{K-1}`, `B` lower-triangular ones)
/// the simplex becomes the ordered set `0 <= y_1 <= ... <= y_{K-1} <= 1` and
/// `eta . x = eta_tilde . y` where `eta_tilde = B^{-T} eta`, i.e.
/// `eta_tilde_i = eta_i - eta_{i+1}` and `eta_tilde_{K-1} = eta_{K-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationSetup {
    pub eta_tilde: Vec<f64>,
}

impl PermutationSetup {
    pub fn new(eta: &NaturalParams) -> Self {
        let e = eta.as_slice();
        let d = e.len();
        let eta_tilde = (0..d)
            .map(|i| if i + 1 < d { e[i] - e[i + 1] } else { e[i] })
            .collect();
        Self { eta_tilde }
    }

    /// `B^T eta_tilde`, the suffix sums, which recovers `eta`.
    pub fn to_natural(&self) -> Vec<f64> {
        let mut out = self.eta_tilde.clone();
        for i in (0..out.len().saturating_sub(1)).rev() {
            out[i] += out[i + 1];
        }
        out
    }
}

/// Independent continuous Bernoulli draws in cumulative coordinates, sorted
/// into the ordered set and accepted with the density ratio for the sorting
/// permutation, bounded by its maximum over the vertices.
pub(crate) struct Permutation {
    eta_tilde: Vec<f64>,
    y: Vec<f64>,
    perm: Vec<usize>,
    sorted: Vec<f64>,
}

impl Permutation {
    pub(crate) fn new(eta: &NaturalParams) -> Self {
        let eta_tilde = PermutationSetup::new(eta).eta_tilde;
        let d = eta_tilde.len();
        Self {
            eta_tilde,
            y: vec![0.0; d],
            perm: (0..d).collect(),
            sorted: vec![0.0; d + 1],
        }
    }
}

/// Log acceptance probability `d . y - log kappa` with
/// `d_j = eta_tilde_j - eta_tilde_{perm(j)}`.
///
/// The ratio `exp(d . y)` is maximized over the ordered set at one of its
/// vertices `(0, ..., 0, 1, ..., 1)`, where `d . y` is a suffix sum of `d`
/// (or zero at the origin).
pub(crate) fn log_acceptance(eta_tilde: &[f64], perm: &[usize], y_sorted: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut suffix = 0.0;
    let mut log_kappa: f64 = 0.0;
    for j in (0..perm.len()).rev() {
        let dj = eta_tilde[j] - eta_tilde[perm[j]];
        dot += dj * y_sorted[j];
        suffix += dj;
        log_kappa = log_kappa.max(suffix);
    }
    dot - log_kappa
}

impl Proposal for Permutation {
    const NAME: &'static str = "permutation";

    #[inline]
    fn attempt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<SimplexPoint> {
        let d = self.eta_tilde.len();
        for (y, &e) in self.y.iter_mut().zip(&self.eta_tilde) {
            *y = cb_inverse_cdf_natural(rng.gen::<f64>(), e);
        }
        for (j, p) in self.perm.iter_mut().enumerate() {
            *p = j;
        }
        let y = &self.y;
        self.perm.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
        for j in 0..d {
            self.sorted[j] = y[self.perm[j]];
        }
        let log_alpha = log_acceptance(&self.eta_tilde, &self.perm, &self.sorted[..d]);
        debug_assert!(log_alpha <= 1e-9, "acceptance ratio above one: {log_alpha}");
        let u: f64 = rng.gen();
        if u >= log_alpha.exp() {
            return None;
        }
        // x = B^{-1} y: first differences, then the remainder.
        let mut x = Vec::with_capacity(d + 1);
        let mut prev = 0.0;
        for &yj in &self.sorted[..d] {
            x.push(yj - prev);
            prev = yj;
        }
        x.push(1.0 - prev);
        Some(SimplexPoint::from_full_unchecked(x))
    }
}

/// Draws `n` points with the permutation sampler. Rejection-free at the
/// uniform distribution and effective when `lambda` is close to balanced.
pub fn sample_permutation<R: Rng + ?Sized>(
    eta: &NaturalParams,
    n: usize,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    run(&mut Permutation::new(eta), eta, n, rng, opts)
}

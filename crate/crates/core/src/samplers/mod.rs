//! Exact rejection samplers.
//!
//! All samplers draw uniforms from `[0, 1)` through `Rng::gen::<f64>()` and
//! push them through [`cb_inverse_cdf_natural`](crate::cb::cb_inverse_cdf_natural).
//! Every proposal consumes a fixed number of uniforms, whether it is
//! accepted or not, so two samplers that make the same decisions stay in
//! lockstep on a shared stream.

mod bench;
mod naive;
mod ordered;
mod permutation;
mod reparam;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalizer::{log_cb_normalizer, log_normalizer};
use crate::params::{NaturalParams, SimplexPoint};

pub use bench::{benchmark_samplers, dirichlet, BenchConfig, BenchPrior, BenchRecord};
pub use naive::sample_naive;
pub use ordered::sample_ordered;
pub use permutation::{sample_permutation, PermutationSetup};
pub use reparam::{reparam_jacobian, reparam_sample, reparam_transform, ReparamBatch};

/// Default proposal budget per requested sample.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerOptions {
    /// Proposals allowed for each requested sample before giving up.
    pub budget: u64,
    /// Whether the ordered sampler sorts components by decreasing `lambda`.
    /// With `false` it keeps the natural order and the last category as
    /// pivot, which makes it draw for draw identical to the naive sampler.
    pub reorder: bool,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            reorder: true,
        }
    }
}

/// Which concrete sampler to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Naive,
    Ordered,
    Permutation,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 3] = [Self::Naive, Self::Ordered, Self::Permutation];

    pub fn name(self) -> &'static str {
        match self {
            Self::Naive => "naive",
            Self::Ordered => "ordered",
            Self::Permutation => "permutation",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A sampler choice, including automatic selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    Naive,
    Ordered,
    Permutation,
    /// Ordered when `max lambda_i >= 2 / K`, permutation otherwise.
    #[default]
    Auto,
}

impl Method {
    pub fn resolve(self, eta: &NaturalParams) -> SamplerKind {
        match self {
            Self::Naive => SamplerKind::Naive,
            Self::Ordered => SamplerKind::Ordered,
            Self::Permutation => SamplerKind::Permutation,
            Self::Auto => auto_select(eta),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Self::Naive),
            "ordered" => Ok(Self::Ordered),
            "permutation" => Ok(Self::Permutation),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidArgument(format!(
                "unknown sampler `{other}` (expected naive, ordered, permutation or auto)"
            ))),
        }
    }
}

/// The auto-selection rule.
pub fn auto_select(eta: &NaturalParams) -> SamplerKind {
    let lambda = eta.to_mean();
    let top = lambda.as_slice().iter().cloned().fold(0.0, f64::max);
    if top >= 2.0 / lambda.k() as f64 {
        SamplerKind::Ordered
    } else {
        SamplerKind::Permutation
    }
}

/// Accepted draws plus proposal accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub points: Vec<SimplexPoint>,
    /// Proposals spent on each point, the accepted one included.
    pub proposals: Vec<u64>,
    /// Seed of the stream the batch came from, when known.
    pub seed: Option<u64>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_proposals(&self) -> u64 {
        self.proposals.iter().sum()
    }

    /// Accepted draws divided by proposals made.
    pub fn acceptance_rate(&self) -> f64 {
        self.len() as f64 / self.total_proposals() as f64
    }
}

/// One proposal-and-test step of a rejection sampler.
pub(crate) trait Proposal {
    const NAME: &'static str;

    fn attempt<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<SimplexPoint>;
}

/// Runs `attempt` until it accepts or `budget` proposals are spent. Returns
/// the point (if any) and the proposals used.
pub(crate) fn draw_one<P: Proposal, R: Rng + ?Sized>(
    p: &mut P,
    rng: &mut R,
    budget: u64,
) -> (Option<SimplexPoint>, u64) {
    let mut used = 0;
    while used < budget {
        used += 1;
        if let Some(x) = p.attempt(rng) {
            return (Some(x), used);
        }
    }
    (None, used)
}

pub(crate) fn run<P: Proposal, R: Rng + ?Sized>(
    p: &mut P,
    eta: &NaturalParams,
    n: usize,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    check_n(n)?;
    let mut points = Vec::with_capacity(n);
    let mut proposals = Vec::with_capacity(n);
    for _ in 0..n {
        match draw_one(p, rng, opts.budget) {
            (Some(x), used) => {
                points.push(x);
                proposals.push(used);
            }
            (None, _) => return Err(budget_error(P::NAME, opts.budget, eta)),
        }
    }
    Ok(SampleBatch {
        points,
        proposals,
        seed: None,
    })
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    Ok(())
}

pub(crate) fn budget_error(sampler: &'static str, budget: u64, eta: &NaturalParams) -> Error {
    Error::BudgetExceeded {
        sampler,
        budget,
        params: format!("eta = {:?}", eta.as_slice()),
    }
}

/// Draws `n` points with the chosen sampler.
pub fn sample<R: Rng + ?Sized>(
    method: Method,
    eta: &NaturalParams,
    n: usize,
    rng: &mut R,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    match method.resolve(eta) {
        SamplerKind::Naive => sample_naive(eta, n, rng, opts),
        SamplerKind::Ordered => sample_ordered(eta, n, rng, opts),
        SamplerKind::Permutation => sample_permutation(eta, n, rng, opts),
    }
}

/// [`sample`] on a fresh ChaCha8 stream seeded with `seed`; the seed is
/// recorded in the batch.
pub fn sample_seeded(
    method: Method,
    eta: &NaturalParams,
    n: usize,
    seed: u64,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = sample(method, eta, n, &mut rng, opts)?;
    batch.seed = Some(seed);
    Ok(batch)
}

/// Splits `n` draws over `workers` threads. Worker `w` takes a contiguous
/// share and samples from stream `w` of the ChaCha8 generator seeded with
/// `seed`; results are concatenated in worker order. The output depends on
/// `workers` but is otherwise deterministic.
pub fn sample_parallel(
    method: Method,
    eta: &NaturalParams,
    n: usize,
    seed: u64,
    workers: usize,
    opts: &SamplerOptions,
) -> Result<SampleBatch> {
    check_n(n)?;
    let workers = workers.clamp(1, n);
    let base = n / workers;
    let extra = n % workers;
    let parts: Vec<Result<SampleBatch>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let count = base + usize::from(w < extra);
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(w as u64);
                    sample(method, eta, count, &mut rng, opts)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler worker panicked"))
            .collect()
    });
    let mut out = SampleBatch {
        points: Vec::with_capacity(n),
        proposals: Vec::with_capacity(n),
        seed: Some(seed),
    };
    for part in parts {
        let part = part?;
        out.points.extend(part.points);
        out.proposals.extend(part.proposals);
    }
    Ok(out)
}

/// Runs exactly `proposals` proposal steps of the chosen sampler and returns
/// how many were accepted.
pub fn acceptance_count<R: Rng + ?Sized>(
    kind: SamplerKind,
    eta: &NaturalParams,
    proposals: u64,
    rng: &mut R,
) -> u64 {
    fn count<P: Proposal, R: Rng + ?Sized>(p: &mut P, n: u64, rng: &mut R) -> u64 {
        (0..n).filter(|_| p.attempt(rng).is_some()).count() as u64
    }
    match kind {
        SamplerKind::Naive => count(&mut naive::Naive::new(eta), proposals, rng),
        SamplerKind::Ordered => count(&mut ordered::Ordered::new(eta, true), proposals, rng),
        SamplerKind::Permutation => count(&mut permutation::Permutation::new(eta), proposals, rng),
    }
}

/// Probability that one naive proposal is accepted:
/// `prod_i eta_i / (e^eta_i - 1)` divided by `C(eta)`.
pub fn naive_acceptance_rate(eta: &NaturalParams) -> f64 {
    let log_factors: f64 = eta.as_slice().iter().map(|&e| log_cb_normalizer(e)).sum();
    (log_factors - log_normalizer(eta).value()).exp().min(1.0)
}

/// Probability that one ordered-sampler proposal is accepted: the naive rate
/// with the largest-`lambda` category as the remainder.
pub fn ordered_acceptance_rate(eta: &NaturalParams) -> f64 {
    let full = eta.full();
    let top = full.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pivot = full.iter().position(|&v| v == top).unwrap_or(0);
    let log_factors: f64 = full
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pivot)
        .map(|(_, &l)| log_cb_normalizer(l - top))
        .sum();
    // Relative to the pivot the normalizer shifts by its natural parameter.
    (log_factors - log_normalizer(eta).value() - top)
        .exp()
        .min(1.0)
}

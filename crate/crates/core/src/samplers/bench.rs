//! Proposals-per-acceptance benchmark over random parameters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::naive::Naive;
use super::ordered::Ordered;
use super::permutation::Permutation;
use super::{draw_one, SamplerKind, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::params::{MeanParams, NaturalParams};

/// Where each trial's `lambda` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BenchPrior {
    /// Symmetric Dirichlet with this concentration; `None` means `1 / K`.
    Dirichlet(Option<f64>),
    /// Always the uniform `lambda`, as a control.
    FixedUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub k_values: Vec<usize>,
    pub trials: usize,
    pub prior: BenchPrior,
    /// Proposals allowed before a trial is recorded as censored.
    pub budget: u64,
    pub seed: u64,
    pub samplers: Vec<SamplerKind>,
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            k_values: (2..=8).collect(),
            trials: 100,
            prior: BenchPrior::Dirichlet(None),
            budget: DEFAULT_BUDGET,
            seed: 0,
            samplers: SamplerKind::ALL.to_vec(),
            workers: 1,
        }
    }
}

/// Proposals one sampler needed for one acceptance in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub k: usize,
    pub sampler: SamplerKind,
    pub trial: usize,
    pub proposals: u64,
    /// The budget ran out first; `proposals` is then the budget.
    pub censored: bool,
}

impl BenchRecord {
    pub fn log10_proposals(&self) -> f64 {
        (self.proposals as f64).log10()
    }
}

/// A draw from the symmetric-or-not Dirichlet via normalized Gamma
/// variates. Components that underflow are floored at `f64::MIN_POSITIVE`.
pub fn dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<MeanParams> {
    let mut w = Vec::with_capacity(alpha.len());
    for &a in alpha {
        let g = Gamma::new(a, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        w.push(g.sample(rng).max(f64::MIN_POSITIVE));
    }
    MeanParams::from_weights(w)
}

fn trial_stream(seed: u64, k: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((k as u64) << 32) | trial as u64);
    rng
}

fn run_trial(cfg: &BenchConfig, k: usize, trial: usize) -> Result<Vec<BenchRecord>> {
    let mut rng = trial_stream(cfg.seed, k, trial);
    let lambda = match cfg.prior {
        BenchPrior::FixedUniform => MeanParams::uniform(k),
        BenchPrior::Dirichlet(c) => {
            let c = c.unwrap_or(1.0 / k as f64);
            dirichlet(&vec![c; k], &mut rng)?
        }
    };
    let eta: NaturalParams = lambda.to_natural();
    let mut out = Vec::with_capacity(cfg.samplers.len());
    for &sampler in &cfg.samplers {
        let (point, used) = match sampler {
            SamplerKind::Naive => draw_one(&mut Naive::new(&eta), &mut rng, cfg.budget),
            SamplerKind::Ordered => draw_one(&mut Ordered::new(&eta, true), &mut rng, cfg.budget),
            SamplerKind::Permutation => draw_one(&mut Permutation::new(&eta), &mut rng, cfg.budget),
        };
        out.push(BenchRecord {
            k,
            sampler,
            trial,
            proposals: used,
            censored: point.is_none(),
        });
    }
    Ok(out)
}

/// Runs every configured sampler once per trial and `K`, counting the
/// proposals spent on the first acceptance.
///
/// Trial `t` at dimension `K` uses its own ChaCha8 stream, so the records do
/// not depend on `workers`. Records are ordered by `K`, then trial, then
/// sampler in configuration order.
pub fn benchmark_samplers(cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if cfg.budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    if let Some(&k) = cfg.k_values.iter().find(|&&k| k < 2) {
        return Err(Error::TooFewComponents { min: 2, got: k });
    }
    if let BenchPrior::Dirichlet(Some(c)) = cfg.prior {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::OutOfRange {
                name: "concentration",
                value: c,
                reason: "must be positive and finite",
            });
        }
    }
    let jobs: Vec<(usize, usize)> = cfg
        .k_values
        .iter()
        .flat_map(|&k| (0..cfg.trials).map(move |t| (k, t)))
        .collect();
    let workers = cfg.workers.clamp(1, jobs.len());
    let chunk = jobs.len().div_ceil(workers);
    let parts: Vec<Result<Vec<BenchRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let mut recs = Vec::new();
                    for &(k, t) in part {
                        recs.extend(run_trial(cfg, k, t)?);
                    }
                    Ok(recs)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("benchmark worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(jobs.len() * cfg.samplers.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

//! Monte Carlo estimate of the bias of the fitted mean.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mle::{fit_mean, MleConfig, BOUNDARY_THRESHOLD};
use crate::distribution::mean;
use crate::error::{Error, Result};
use crate::params::MeanParams;
use crate::samplers::{dirichlet, sample, Method, SamplerOptions};

/// The distribution the datasets are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum Truth {
    Fixed(MeanParams),
    /// `lambda` drawn uniformly on the simplex, once per block of trials.
    UniformPrior {
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasConfig {
    pub truth: Truth,
    pub n_values: Vec<usize>,
    /// Datasets per sample size; at least 100.
    pub trials: usize,
    /// Trials sharing one random stream (and one `lambda` under the uniform
    /// prior).
    pub block_size: usize,
    pub method: Method,
    /// Run the Newton fit and use its fitted mean, instead of the sample
    /// average it provably equals.
    pub refit: bool,
    pub workers: usize,
    pub seed: u64,
    pub budget: u64,
}

impl BiasConfig {
    pub fn new(truth: Truth, n_values: Vec<usize>) -> Self {
        Self {
            truth,
            n_values,
            trials: 10_000,
            block_size: 100,
            method: Method::Auto,
            refit: false,
            workers: 1,
            seed: 0,
            budget: SamplerOptions::default().budget,
        }
    }
}

/// Per-component bias of the fitted mean for one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub n: usize,
    pub component: usize,
    /// Average of `estimate - truth` over the used trials.
    pub bias: f64,
    /// Standard error of `bias`.
    pub se: f64,
    pub trials_used: usize,
    /// Trials dropped because the sample average touched the boundary.
    pub excluded: usize,
}

#[derive(Debug, Clone)]
struct BlockSums {
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    used: usize,
    excluded: usize,
}

fn run_block(
    cfg: &BiasConfig,
    k: usize,
    n: usize,
    block: usize,
    count: usize,
) -> Result<BlockSums> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((n as u64) << 32) | block as u64);
    let lambda = match &cfg.truth {
        Truth::Fixed(l) => l.clone(),
        Truth::UniformPrior { k } => dirichlet(&vec![1.0; *k], &mut rng)?,
    };
    let eta = lambda.to_natural();
    let truth_mean = mean(&eta);
    let opts = SamplerOptions {
        budget: cfg.budget,
        ..Default::default()
    };
    let mut out = BlockSums {
        sum: vec![0.0; k],
        sumsq: vec![0.0; k],
        used: 0,
        excluded: 0,
    };
    for _ in 0..count {
        let batch = sample(cfg.method, &eta, n, &mut rng, &opts)?;
        let mut xbar = vec![0.0; k];
        for p in &batch.points {
            for (a, b) in xbar.iter_mut().zip(p.as_slice()) {
                *a += b;
            }
        }
        xbar.iter_mut().for_each(|v| *v /= n as f64);
        if xbar.iter().any(|v| *v < BOUNDARY_THRESHOLD) {
            out.excluded += 1;
            continue;
        }
        let estimate = if cfg.refit {
            match fit_mean(&xbar, &MleConfig::default()) {
                Ok(r) => mean(&r.params),
                Err(Error::BoundaryAverage { .. }) => {
                    out.excluded += 1;
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            xbar
        };
        for i in 0..k {
            let e = estimate[i] - truth_mean[i];
            out.sum[i] += e;
            out.sumsq[i] += e * e;
        }
        out.used += 1;
    }
    Ok(out)
}

/// For each `n`, draws `trials` datasets of size `n`, fits each, and reports
/// the average error of the fitted mean per component.
///
/// Block `b` at sample size `n` uses stream `(n << 32) | b` of a ChaCha8
/// generator seeded with `seed`, and block totals are combined in block
/// order, so the table does not depend on `workers`.
pub fn bias_simulation(cfg: &BiasConfig) -> Result<Vec<BiasRow>> {
    if cfg.trials < 100 {
        return Err(Error::OutOfRange {
            name: "trials",
            value: cfg.trials as f64,
            reason: "need at least 100 trials",
        });
    }
    if cfg.block_size == 0 {
        return Err(Error::InvalidArgument(
            "block size must be at least 1".into(),
        ));
    }
    if cfg.n_values.is_empty() || cfg.n_values.contains(&0) {
        return Err(Error::InvalidArgument(
            "sample sizes must be at least 1".into(),
        ));
    }
    let k = match &cfg.truth {
        Truth::Fixed(l) => l.k(),
        Truth::UniformPrior { k } => {
            if *k < 2 {
                return Err(Error::TooFewComponents { min: 2, got: *k });
            }
            *k
        }
    };
    let blocks = cfg.trials.div_ceil(cfg.block_size);
    let jobs: Vec<(usize, usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| {
            (0..blocks).map(move |b| {
                let count = cfg.block_size.min(cfg.trials - b * cfg.block_size);
                (n, b, count)
            })
        })
        .collect();
    let workers = cfg.workers.clamp(1, jobs.len());
    let chunk = jobs.len().div_ceil(workers);
    let parts: Vec<Result<Vec<BlockSums>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&(n, b, count)| run_block(cfg, k, n, b, count))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bias worker panicked"))
            .collect()
    });
    let mut sums = Vec::with_capacity(jobs.len());
    for p in parts {
        sums.extend(p?);
    }

    let mut rows = Vec::with_capacity(cfg.n_values.len() * k);
    for (ni, &n) in cfg.n_values.iter().enumerate() {
        let mut sum = vec![0.0; k];
        let mut sumsq = vec![0.0; k];
        let mut used = 0;
        let mut excluded = 0;
        for s in &sums[ni * blocks..(ni + 1) * blocks] {
            for i in 0..k {
                sum[i] += s.sum[i];
                sumsq[i] += s.sumsq[i];
            }
            used += s.used;
            excluded += s.excluded;
        }
        for i in 0..k {
            let (bias, se) = if used == 0 {
                (f64::NAN, f64::NAN)
            } else {
                let m = sum[i] / used as f64;
                let var = if used > 1 {
                    ((sumsq[i] - used as f64 * m * m) / (used - 1) as f64).max(0.0)
                } else {
                    f64::NAN
                };
                (m, (var / used as f64).sqrt())
            };
            rows.push(BiasRow {
                n,
                component: i,
                bias,
                se,
                trials_used: used,
                excluded,
            });
        }
    }
    Ok(rows)
}

#![allow(clippy::needless_range_loop)]

use contcat::samplers::{
    acceptance_count, benchmark_samplers, naive_acceptance_rate, ordered_acceptance_rate,
    reparam_sample, reparam_transform, sample, sample_parallel, sample_seeded, BenchConfig,
    BenchPrior, Method, SamplerKind, SamplerOptions,
};
use contcat::{mean, MeanParams, NaturalParams};
use contcat_testkit::{quad, stats, SplitMix64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KINDS: [Method; 3] = [Method::Naive, Method::Ordered, Method::Permutation];

fn eta(v: Vec<f64>) -> NaturalParams {
    NaturalParams::new(v).unwrap()
}

fn opts() -> SamplerOptions {
    SamplerOptions::default()
}

/// Parameter sets used by the distributional tests.
fn cases() -> Vec<NaturalParams> {
    vec![
        eta(vec![0.0]),
        eta(vec![4.0]),
        eta(vec![1.0, 2.0]),
        eta(vec![-3.0, 2.5, 0.5]),
        MeanParams::new(vec![0.7, 0.1, 0.1, 0.05, 0.05])
            .unwrap()
            .to_natural(),
        MeanParams::new(vec![0.05, 0.1, 0.15, 0.2, 0.5])
            .unwrap()
            .to_natural(),
    ]
}

/// Independent reference draws: uniform points on the simplex accepted with
/// probability `exp(eta . x - max)`.
fn reference_draws(e: &NaturalParams, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = SplitMix64::new(seed);
    let full = e.full();
    let top = full.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let k = full.len();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = rng.simplex(k);
        let s: f64 = x.iter().zip(&full).map(|(a, b)| a * b).sum();
        if rng.next_f64() < (s - top).exp() {
            out.push(x);
        }
    }
    out
}

#[test]
fn sample_means_match_analytic_means() {
    for (c, e) in cases().into_iter().enumerate() {
        let m = mean(&e);
        for (s, method) in KINDS.into_iter().enumerate() {
            let seed = 1000 + (c * 10 + s) as u64;
            let batch = sample_seeded(method, &e, 40_000, seed, &opts()).unwrap();
            for i in 0..e.k() {
                let xs: Vec<f64> = batch.points.iter().map(|p| p.as_slice()[i]).collect();
                let (avg, se) = stats::mean_se(&xs);
                assert!(
                    (avg - m[i]).abs() < 4.0 * se,
                    "{method:?} eta = {e:?} component {i}: {avg} +- {se} vs {}",
                    m[i]
                );
            }
        }
    }
}

#[test]
fn marginals_pass_bonferroni_ks() {
    let cases = cases();
    let comparisons: usize = cases.iter().map(|e| e.k() * KINDS.len()).sum();
    let threshold = 0.01 / comparisons as f64;
    for (c, e) in cases.iter().enumerate() {
        let reference = reference_draws(e, 5000, 77 + c as u64);
        for (s, method) in KINDS.into_iter().enumerate() {
            let seed = 5000 + (c * 10 + s) as u64;
            let batch = sample_seeded(method, e, 5000, seed, &opts()).unwrap();
            for i in 0..e.k() {
                let a: Vec<f64> = batch.points.iter().map(|p| p.as_slice()[i]).collect();
                let b: Vec<f64> = reference.iter().map(|p| p[i]).collect();
                let ks = stats::ks_two_sample(&a, &b);
                assert!(
                    ks.p_value > threshold,
                    "{method:?} eta = {e:?} component {i}: D = {}, p = {}",
                    ks.statistic,
                    ks.p_value
                );
            }
        }
    }
}

/// Probability that independent two-sided exponential variables on [0, 1]
/// with parameters `eta` sum to at most one.
fn naive_rate_by_quadrature(e: &[f64]) -> f64 {
    let density = |x: f64, a: f64| {
        if a == 0.0 {
            1.0
        } else {
            a * (a * x).exp() / a.exp_m1()
        }
    };
    let cdf = |x: f64, a: f64| {
        if a == 0.0 {
            x
        } else {
            (a * x).exp_m1() / a.exp_m1()
        }
    };
    let d = e.len();
    let f = |x: &[f64]| {
        let r = (1.0 - x.iter().sum::<f64>()).clamp(0.0, 1.0);
        x.iter()
            .zip(e)
            .map(|(xi, a)| density(*xi, *a))
            .product::<f64>()
            * cdf(r, e[d - 1])
    };
    if d == 1 {
        1.0
    } else {
        quad::simplex_integral(d - 1, &f, 1e-12)
    }
}

#[test]
fn naive_rate_formula_matches_quadrature() {
    let v = naive_acceptance_rate(&eta(vec![1.0, -2.0, 3.0]));
    assert!((v - 0.080_115_333_416_072).abs() < 1e-13);
    let mut rng = SplitMix64::new(31);
    for _ in 0..20 {
        let k = 2 + rng.below(3);
        let e: Vec<f64> = (0..k - 1).map(|_| rng.uniform(-6.0, 6.0)).collect();
        let formula = naive_acceptance_rate(&eta(e.clone()));
        let oracle = naive_rate_by_quadrature(&e);
        assert!(
            (formula - oracle).abs() < 1e-9,
            "eta = {e:?}: {formula} vs {oracle}"
        );
    }
}

#[test]
fn observed_acceptance_matches_formulas() {
    let proposals = 200_000;
    let params: Vec<NaturalParams> = cases().into_iter().skip(2).collect();
    let threshold = 0.01 / (2 * params.len()) as f64;
    for (c, e) in params.iter().enumerate() {
        for (kind, rate) in [
            (SamplerKind::Naive, naive_acceptance_rate(e)),
            (SamplerKind::Ordered, ordered_acceptance_rate(e)),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(300 + c as u64);
            let hits = acceptance_count(kind, e, proposals, &mut rng);
            let p = stats::binomial_two_sided_p(hits, proposals, rate);
            assert!(
                p > threshold,
                "{kind} eta = {e:?}: {hits}/{proposals} vs {rate} (p = {p})"
            );
        }
    }
}

#[test]
fn ordered_never_worse_than_naive() {
    let mut rng = SplitMix64::new(41);
    for k in 3..=8 {
        for _ in 0..100 {
            let lam = MeanParams::new(rng.simplex(k)).unwrap();
            let e = lam.to_natural();
            let naive = naive_acceptance_rate(&e);
            let ordered = ordered_acceptance_rate(&e);
            assert!(
                ordered >= naive * (1.0 - 1e-12),
                "lambda = {lam:?}: {ordered} < {naive}"
            );
        }
    }
}

#[test]
fn ordered_equals_naive_without_reordering() {
    let e = eta(vec![-1.0, 2.0, 0.5, 0.0]);
    let plain = SamplerOptions {
        reorder: false,
        ..opts()
    };
    let a = sample_seeded(Method::Naive, &e, 2000, 9, &opts()).unwrap();
    let b = sample_seeded(Method::Ordered, &e, 2000, 9, &plain).unwrap();
    assert_eq!(a.points, b.points);
    assert_eq!(a.proposals, b.proposals);

    // Already in decreasing order with the largest category last.
    let sorted = MeanParams::new(vec![0.25, 0.15, 0.1, 0.5])
        .unwrap()
        .to_natural();
    let a = sample_seeded(Method::Naive, &sorted, 2000, 10, &opts()).unwrap();
    let b = sample_seeded(Method::Ordered, &sorted, 2000, 10, &opts()).unwrap();
    assert_eq!(a.points, b.points);
}

#[test]
fn seeded_sampling_is_deterministic() {
    let e = eta(vec![1.0, -2.0, 3.0]);
    for method in KINDS {
        let a = sample_seeded(method, &e, 500, 5, &opts()).unwrap();
        let b = sample_seeded(method, &e, 500, 5, &opts()).unwrap();
        assert_eq!(a, b);
        let c = sample_seeded(method, &e, 500, 6, &opts()).unwrap();
        assert_ne!(a.points, c.points);
        let p = sample_parallel(method, &e, 1001, 5, 4, &opts()).unwrap();
        assert_eq!(p, sample_parallel(method, &e, 1001, 5, 4, &opts()).unwrap());
        assert_eq!(p.len(), 1001);
    }
}

#[test]
fn permutation_sampler_never_rejects_uniform() {
    for k in 2..=10 {
        let e = NaturalParams::zeros(k);
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        assert_eq!(
            acceptance_count(SamplerKind::Permutation, &e, 10_000, &mut rng),
            10_000
        );
    }
}

#[test]
fn dominant_category_is_nearly_rejection_free() {
    let e = MeanParams::new(vec![0.98, 0.01, 0.01])
        .unwrap()
        .to_natural();
    assert_eq!(Method::Auto.resolve(&e), SamplerKind::Ordered);
    assert!(ordered_acceptance_rate(&e) >= 0.9);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let batch = sample(Method::Auto, &e, 10_000, &mut rng, &opts()).unwrap();
    assert!(
        batch.acceptance_rate() >= 0.9,
        "{}",
        batch.acceptance_rate()
    );
}

#[test]
fn naive_benchmark_on_uniform_parameters() {
    // One acceptance in (K - 1)! proposals at the uniform parameter.
    let cfg = BenchConfig {
        k_values: vec![6],
        trials: 400,
        prior: BenchPrior::FixedUniform,
        budget: 100_000,
        seed: 8,
        samplers: vec![SamplerKind::Naive, SamplerKind::Permutation],
        workers: 2,
    };
    let records = benchmark_samplers(&cfg).unwrap();
    let naive: Vec<f64> = records
        .iter()
        .filter(|r| r.sampler == SamplerKind::Naive)
        .map(|r| r.proposals as f64)
        .collect();
    let (m, se) = stats::mean_se(&naive);
    assert!((72.0..=168.0).contains(&m), "mean proposals {m}");
    assert!((m - 120.0).abs() < 4.0 * se, "{m} +- {se}");
    assert!(records
        .iter()
        .filter(|r| r.sampler == SamplerKind::Permutation)
        .all(|r| r.proposals == 1));
}

#[test]
fn reparameterized_draws_have_the_right_mean() {
    let lam = MeanParams::new(vec![0.3, 0.1, 0.6]).unwrap();
    let m = mean(&lam.to_natural());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let rb = reparam_sample(&lam, 30_000, &mut rng, &opts()).unwrap();
    for i in 0..3 {
        let xs: Vec<f64> = rb.batch.points.iter().map(|p| p.as_slice()[i]).collect();
        let (avg, se) = stats::mean_se(&xs);
        assert!((avg - m[i]).abs() < 4.0 * se);
    }
    for (p, u) in rb.batch.points.iter().zip(&rb.uniforms).take(100) {
        assert_eq!(&reparam_transform(&lam, u).unwrap(), p);
    }
}

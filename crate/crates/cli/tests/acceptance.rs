//! End-to-end acceptance checks. Each test prints one PASS/FAIL line and then
//! asserts on the same outcome. All tolerances and time limits are constants
//! below.

#![allow(clippy::needless_range_loop)]

use std::fs;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use contcat::inference::{
    bias_simulation, fit_mle, glm_fit, BiasConfig, Dataset, GlmConfig, GlmObjective, Truth,
};
use contcat::normalizer::literal_log_normalizer;
use contcat::samplers::{
    acceptance_count, benchmark_samplers, naive_acceptance_rate, sample_seeded, BenchConfig,
    BenchPrior, Method, SamplerKind, SamplerOptions,
};
use contcat::{covariance, log_normalizer, log_pdf, mean, NaturalParams, SimplexPoint};
use contcat_testkit::{hp, quad, stats, SplitMix64};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const QUAD_TOL: f64 = 1e-7;
const HP_REL_TOL: f64 = 1e-8;
const LITERAL_FAILURE: f64 = 1e-3;
const GRAD_REL_TOL: f64 = 1e-6;
const HESS_REL_TOL: f64 = 1e-5;
const Z_BOUND: f64 = 4.0;
const FAMILY_ALPHA: f64 = 0.01;
const MLE_TOL: f64 = 1e-8;
const GLM_GRAD_TOL: f64 = 1e-6;
/// Largest absolute error in any weight or bias at n = 2000, set from a pilot
/// over 20 seeds whose worst case was 0.30.
const GLM_RECOVERY_TOL: f64 = 0.40;
const INTERCEPT_TOL: f64 = 1e-4;

const LIMIT_QUADRATURE: Duration = Duration::from_secs(120);
const LIMIT_SAMPLERS: Duration = Duration::from_secs(300);
const LIMIT_BIAS: Duration = Duration::from_secs(300);

type Check = Result<String, String>;

/// Runs one criterion, prints its PASS/FAIL line (bypassing the test
/// harness's capture) and fails the test on FAIL.
fn criterion(id: u32, name: &str, limit: Option<Duration>, body: impl FnOnce() -> Check) {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let elapsed = start.elapsed();
    let outcome = match (outcome, limit) {
        (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:?}, limit {l:?}")),
        (o, _) => o,
    };
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let line = format!(
        "{tag} criterion {id:>2} {name} ({:.1}s): {detail}\n",
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    if let Err(d) = outcome {
        panic!("criterion {id} failed: {d}");
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn eta(v: Vec<f64>) -> NaturalParams {
    NaturalParams::new(v).unwrap()
}

fn random_eta(rng: &mut SplitMix64, k: usize, lo: f64, hi: f64) -> NaturalParams {
    eta((0..k - 1).map(|_| rng.uniform(lo, hi)).collect())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn criterion_01_density_integrates_to_one() {
    criterion(
        1,
        "density integrates to one",
        Some(LIMIT_QUADRATURE),
        || {
            let mut rng = SplitMix64::new(2024);
            let mut worst: f64 = 0.0;
            for k in 2..=4 {
                for _ in 0..50 {
                    let e = random_eta(&mut rng, k, -10.0, 10.0);
                    let density = |x: &[f64]| {
                        let mut full = x.to_vec();
                        full.push((1.0 - x.iter().sum::<f64>()).max(0.0));
                        match SimplexPoint::new(full) {
                            Ok(p) => log_pdf(&p, &e).unwrap().exp(),
                            Err(_) => 0.0,
                        }
                    };
                    let total = quad::simplex_integral(k - 1, &density, 1e-10);
                    worst = worst.max((total - 1.0).abs());
                    ensure((total - 1.0).abs() <= QUAD_TOL, || {
                        format!("K = {k}, eta = {e:?}: {total}")
                    })?;
                }
            }
            Ok(format!(
                "150 parameter sets, worst |integral - 1| = {worst:.1e}"
            ))
        },
    );
}

/// Nodes with one to three near-coincident pairs, gaps 1e-2 to 1e-10.
fn clustered(rng: &mut SplitMix64, k: usize) -> NaturalParams {
    let mut full: Vec<f64> = (0..k - 1).map(|_| rng.uniform(-10.0, 10.0)).collect();
    full.push(0.0);
    for _ in 0..1 + rng.below(3) {
        let a = rng.below(k);
        let mut b = rng.below(k);
        while b == a {
            b = rng.below(k);
        }
        let gap = 10f64.powf(-rng.uniform(2.0, 10.0));
        let (src, dst) = if a == k - 1 { (a, b) } else { (b, a) };
        full[dst] = full[src] + if rng.below(2) == 0 { gap } else { -gap };
    }
    full.pop();
    eta(full)
}

#[test]
fn criterion_02_clustered_nodes() {
    criterion(2, "stable normalizer on clustered nodes", None, || {
        let mut rng = SplitMix64::new(77);
        let (mut worst, mut literal_worst): (f64, f64) = (0.0, 0.0);
        for i in 0..100 {
            let k = 3 + i % 10;
            let e = clustered(&mut rng, k);
            let oracle = hp::ln_normalizer(e.as_slice(), i as u64);
            // Relative error of C itself.
            let rel = (log_normalizer(&e).value() - oracle).exp_m1().abs();
            worst = worst.max(rel);
            ensure(rel <= HP_REL_TOL, || {
                format!("eta = {e:?}: relative error {rel:.2e}")
            })?;
            let lit = literal_log_normalizer(&e);
            let lit_rel = if lit.is_finite() {
                (lit - oracle).exp_m1().abs()
            } else {
                f64::INFINITY
            };
            literal_worst = literal_worst.max(lit_rel);
        }
        ensure(literal_worst > LITERAL_FAILURE, || {
            format!("literal sum never exceeded {LITERAL_FAILURE}: {literal_worst:.2e}")
        })?;
        Ok(format!(
            "worst relative error {worst:.1e}; literal sum worst {literal_worst:.1e}"
        ))
    });
}

#[test]
fn criterion_03_moments_are_derivatives() {
    criterion(3, "mean and covariance from derivatives", None, || {
        let mut rng = SplitMix64::new(303);
        let (mut g_worst, mut h_worst): (f64, f64) = (0.0, 0.0);
        let h = 1e-4;
        for trial in 0..20 {
            let k = 2 + trial % 5;
            let e = random_eta(&mut rng, k, -5.0, 5.0);
            let at = |i: usize, d: f64| {
                let mut v = e.as_slice().to_vec();
                v[i] += d;
                eta(v)
            };
            let m = mean(&e);
            let fd: Vec<f64> = (0..k - 1)
                .map(|i| {
                    -(log_normalizer(&at(i, h)).value() - log_normalizer(&at(i, -h)).value())
                        / (2.0 * h)
                })
                .collect();
            let diff: Vec<f64> = fd.iter().zip(&m).map(|(a, b)| a - b).collect();
            let g_rel = norm(&diff) / norm(&m[..k - 1]);
            let cov = covariance(&e);
            let fd_h = DMatrix::from_fn(k - 1, k - 1, |i, j| {
                (mean(&at(j, h))[i] - mean(&at(j, -h))[i]) / (2.0 * h)
            });
            let h_rel = (&fd_h - &cov).norm() / cov.norm();
            g_worst = g_worst.max(g_rel);
            h_worst = h_worst.max(h_rel);
            ensure(g_rel <= GRAD_REL_TOL && h_rel <= HESS_REL_TOL, || {
                format!("eta = {e:?}: gradient {g_rel:.2e}, Hessian {h_rel:.2e}")
            })?;
        }
        Ok(format!(
            "worst gradient error {g_worst:.1e}, Hessian {h_worst:.1e}"
        ))
    });
}

#[test]
fn criterion_04_sampler_exactness() {
    criterion(
        4,
        "sampler means and marginals",
        Some(LIMIT_SAMPLERS),
        || {
            let methods = [Method::Naive, Method::Ordered, Method::Permutation];
            let n = 50_000;
            let mut rng = SplitMix64::new(404);
            let params: Vec<NaturalParams> = (0..20)
                .map(|i| random_eta(&mut rng, 3 + i % 3, -3.0, 3.0))
                .collect();
            let ks_tests: usize = params.iter().map(|e| 3 * e.k()).sum();
            let threshold = FAMILY_ALPHA / ks_tests as f64;
            let (mut worst_z, mut min_p): (f64, f64) = (0.0, 1.0);
            for (c, e) in params.iter().enumerate() {
                let m = mean(e);
                let batches: Vec<_> = methods
                    .iter()
                    .enumerate()
                    .map(|(s, &method)| {
                        sample_seeded(method, e, n, (c * 3 + s) as u64, &SamplerOptions::default())
                            .unwrap()
                    })
                    .collect();
                let columns: Vec<Vec<Vec<f64>>> = batches
                    .iter()
                    .map(|b| {
                        (0..e.k())
                            .map(|i| b.points.iter().map(|p| p.as_slice()[i]).collect())
                            .collect()
                    })
                    .collect();
                for (s, cols) in columns.iter().enumerate() {
                    for (i, col) in cols.iter().enumerate() {
                        let (avg, se) = stats::mean_se(col);
                        let z = (avg - m[i]).abs() / se;
                        worst_z = worst_z.max(z);
                        ensure(z < Z_BOUND, || {
                            format!("{:?} eta = {e:?} component {i}: z = {z:.2}", methods[s])
                        })?;
                    }
                }
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    for i in 0..e.k() {
                        let ks = stats::ks_two_sample(&columns[a][i], &columns[b][i]);
                        min_p = min_p.min(ks.p_value);
                        ensure(ks.p_value > threshold, || {
                            format!(
                                "{:?} vs {:?}, eta = {e:?}, component {i}: p = {:.2e}",
                                methods[a], methods[b], ks.p_value
                            )
                        })?;
                    }
                }
            }
            Ok(format!(
                "worst |z| {worst_z:.2}; smallest KS p {min_p:.1e} (threshold {threshold:.1e})"
            ))
        },
    );
}

#[test]
fn criterion_05_naive_acceptance_rate() {
    criterion(5, "naive acceptance-rate formula", None, || {
        let proposals = 200_000;
        let threshold = FAMILY_ALPHA / 20.0;
        let mut rng = SplitMix64::new(505);
        let mut min_p: f64 = 1.0;
        for i in 0..20 {
            let e = random_eta(&mut rng, 2 + i % 5, -4.0, 4.0);
            let rate = naive_acceptance_rate(&e);
            let mut r = ChaCha8Rng::seed_from_u64(i as u64);
            let hits = acceptance_count(SamplerKind::Naive, &e, proposals, &mut r);
            let p = stats::binomial_two_sided_p(hits, proposals, rate);
            min_p = min_p.min(p);
            ensure(p > threshold, || {
                format!("eta = {e:?}: {hits}/{proposals} against rate {rate:.5} (p = {p:.2e})")
            })?;
        }
        Ok(format!(
            "20 parameter sets, smallest binomial p {min_p:.2e}"
        ))
    });
}

fn median(v: &mut [u64]) -> f64 {
    v.sort_unstable();
    let n = v.len();
    (v[(n - 1) / 2] + v[n / 2]) as f64 / 2.0
}

#[test]
fn criterion_06_sampler_benchmark() {
    criterion(6, "sampler benchmark ordering", None, || {
        let cfg = BenchConfig {
            k_values: (3..=8).collect(),
            trials: 100,
            prior: BenchPrior::Dirichlet(None),
            budget: 1_000_000,
            seed: 6,
            samplers: SamplerKind::ALL.to_vec(),
            workers: 4,
        };
        let records = benchmark_samplers(&cfg).unwrap();
        let mut summary = Vec::new();
        for k in 3..=8 {
            let of = |s: SamplerKind| {
                let mut v: Vec<u64> = records
                    .iter()
                    .filter(|r| r.k == k && r.sampler == s)
                    .map(|r| r.proposals)
                    .collect();
                median(&mut v)
            };
            let (naive, ordered) = (of(SamplerKind::Naive), of(SamplerKind::Ordered));
            ensure(ordered <= naive, || {
                format!("K = {k}: ordered {ordered} > naive {naive}")
            })?;
            summary.push(format!("K={k} {ordered}<={naive}"));
        }
        let control = BenchConfig {
            prior: BenchPrior::FixedUniform,
            samplers: vec![SamplerKind::Permutation],
            ..cfg
        };
        let records = benchmark_samplers(&control).unwrap();
        ensure(records.iter().all(|r| r.proposals == 1), || {
            "permutation sampler rejected at uniform lambda".into()
        })?;
        Ok(format!(
            "medians ordered<=naive: {}; uniform control all 1",
            summary.join(", ")
        ))
    });
}

#[test]
fn criterion_07_unbiased_mean() {
    criterion(7, "fitted mean is unbiased", Some(LIMIT_BIAS), || {
        let mut cfg = BiasConfig::new(Truth::UniformPrior { k: 3 }, (2..=20).collect());
        cfg.trials = 10_000;
        cfg.workers = 4;
        cfg.seed = 7;
        let rows = bias_simulation(&cfg).unwrap();
        let mut worst: f64 = 0.0;
        for r in &rows {
            let z = r.bias.abs() / r.se;
            worst = worst.max(z);
            ensure(z <= Z_BOUND, || format!("{r:?}"))?;
        }
        Ok(format!("{} rows, worst |bias| / se {worst:.2}", rows.len()))
    });
}

#[test]
fn criterion_08_mle_matches_average() {
    criterion(8, "MLE matches the sample average", None, || {
        let mut rng = SplitMix64::new(808);
        let mut worst: f64 = 0.0;
        for trial in 0..50 {
            let k = 2 + trial % 6;
            // Every tenth dataset is a single interior point.
            let n = if trial % 10 == 0 {
                1
            } else {
                2 + rng.below(200)
            };
            let rows: Vec<SimplexPoint> = (0..n)
                .map(|_| SimplexPoint::new(rng.simplex(k)).unwrap())
                .collect();
            let data = Dataset::new(rows).unwrap();
            let fit = fit_mle(&data).map_err(|e| format!("trial {trial}: {e}"))?;
            ensure(fit.log_likelihood.is_finite(), || {
                format!("trial {trial}: infinite likelihood")
            })?;
            let gap = mean(&fit.params)
                .iter()
                .zip(data.mean())
                .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            worst = worst.max(gap);
            ensure(gap <= MLE_TOL, || {
                format!("trial {trial} (n = {n}): gap {gap:.2e}")
            })?;
        }
        Ok(format!("50 datasets, worst component gap {worst:.1e}"))
    });
}

fn simulate(w: &DMatrix<f64>, b: &[f64], n: usize, seed: u64) -> Dataset {
    let mut g = SplitMix64::new(seed);
    let gaussian = |g: &mut SplitMix64| {
        let u1 = g.next_f64().max(f64::MIN_POSITIVE);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * g.next_f64()).cos()
    };
    let z = DMatrix::from_fn(n, w.nrows(), |_, _| gaussian(&mut g));
    let rows = (0..n)
        .map(|r| {
            let e: Vec<f64> = (0..b.len())
                .map(|j| b[j] + (0..w.nrows()).map(|l| z[(r, l)] * w[(l, j)]).sum::<f64>())
                .collect();
            sample_seeded(
                Method::Auto,
                &eta(e),
                1,
                seed ^ ((r as u64) << 20),
                &SamplerOptions::default(),
            )
            .unwrap()
            .points
            .remove(0)
        })
        .collect();
    Dataset::with_predictors(rows, z).unwrap()
}

#[test]
fn criterion_09_regression() {
    criterion(9, "regression gradient and recovery", None, || {
        let w = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.5, 2.0]);
        let b = vec![0.5, -0.5];

        let small = simulate(&w, &b, 80, 1);
        let z = small.predictors().unwrap().clone();
        let obj = GlmObjective::new(&z, small.rows(), 0.1).unwrap();
        let mut rng = SplitMix64::new(9);
        let mut g_worst: f64 = 0.0;
        for _ in 0..10 {
            let theta: Vec<f64> = (0..obj.dim()).map(|_| rng.uniform(-2.0, 2.0)).collect();
            let g = obj.gradient(&theta).unwrap();
            let h = 1e-5;
            let fd: Vec<f64> = (0..theta.len())
                .map(|i| {
                    let (mut up, mut down) = (theta.clone(), theta.clone());
                    up[i] += h;
                    down[i] -= h;
                    (obj.value(&up).unwrap() - obj.value(&down).unwrap()) / (2.0 * h)
                })
                .collect();
            let diff: Vec<f64> = fd.iter().zip(&g).map(|(a, c)| a - c).collect();
            let rel = norm(&diff) / norm(&g);
            g_worst = g_worst.max(rel);
            ensure(rel <= GLM_GRAD_TOL, || {
                format!("gradient relative error {rel:.2e}")
            })?;
        }

        let data = simulate(&w, &b, 2000, 2);
        let fit = glm_fit(&data, &GlmConfig::default()).unwrap();
        ensure(fit.converged, || "regression fit did not converge".into())?;
        let (w_hat, b_hat) = fit.params.raw_weights();
        let err = b_hat
            .iter()
            .zip(&b)
            .fold((&w_hat - &w).amax(), |a, (x, y)| a.max((x - y).abs()));
        ensure(err <= GLM_RECOVERY_TOL, || {
            format!("recovery error {err:.3}")
        })?;

        let lone = SplitMix64::new(3).simplex(4);
        let truth = SimplexPoint::new(lone).unwrap();
        let pts = sample_seeded(
            Method::Auto,
            &contcat::MeanParams::new(truth.into_vec())
                .unwrap()
                .to_natural(),
            500,
            4,
            &SamplerOptions::default(),
        )
        .unwrap()
        .points;
        let constant = Dataset::with_predictors(pts, DMatrix::from_element(500, 1, 2.5)).unwrap();
        let glm = glm_fit(&constant, &GlmConfig::default()).unwrap();
        let mle = fit_mle(&constant).unwrap();
        let (_, bias) = glm.params.raw_weights();
        let gap = bias
            .iter()
            .zip(mle.params.as_slice())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        ensure(gap <= INTERCEPT_TOL, || {
            format!("intercept-only gap {gap:.2e}")
        })?;
        Ok(format!(
            "gradient error {g_worst:.1e}; recovery error {err:.3} (limit {GLM_RECOVERY_TOL}); \
             intercept gap {gap:.1e}"
        ))
    });
}

#[test]
fn criterion_10_cli_end_to_end() {
    criterion(10, "command-line round trip and exit codes", None, || {
        let dir = tempfile::TempDir::new().unwrap();
        let path = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
        let run = |args: &[&str]| {
            Command::new(env!("CARGO_BIN_EXE_contcat"))
                .args(args)
                .output()
                .unwrap()
        };
        let code = |args: &[&str]| run(args).status.code().unwrap();

        let (a, b) = (path("a.csv"), path("b.csv"));
        let sample = |out: &str| {
            code(&[
                "--strict",
                "sample",
                "--eta",
                "1.5,-0.5,0.25",
                "--n",
                "20000",
                "--seed",
                "42",
                "--out",
                out,
            ])
        };
        ensure(sample(&a) == 0 && sample(&b) == 0, || {
            "sample failed".into()
        })?;
        ensure(fs::read(&a).unwrap() == fs::read(&b).unwrap(), || {
            "outputs differ".into()
        })?;

        let fit = run(&["fit", "--data", &a]);
        ensure(fit.status.code() == Some(0), || {
            String::from_utf8_lossy(&fit.stderr).into()
        })?;
        let report: serde_json::Value = serde_json::from_slice(&fit.stdout).unwrap();
        ensure(report["rejected_rows"] == 0, || {
            "rows rejected on re-read".into()
        })?;
        let rows: Vec<Vec<f64>> = fs::read_to_string(&a)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect();
        let truth = mean(&eta(vec![1.5, -0.5, 0.25]));
        let mut worst_z: f64 = 0.0;
        for (i, t) in truth.iter().enumerate() {
            let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let (_, se) = stats::mean_se(&col);
            let fitted = report["mean"][i].as_f64().unwrap();
            let z = (fitted - t).abs() / se;
            worst_z = worst_z.max(z);
            ensure(z < Z_BOUND, || format!("component {i}: z = {z:.2}"))?;
        }

        let zeros = path("zeros.csv");
        fs::write(&zeros, "0.3,0,0.7\n0.5,0,0.5\n").unwrap();
        let skewed = path("skewed.csv");
        fs::write(&skewed, "0.9,0.05,0.05\n0.7,0.2,0.1\n").unwrap();
        let cases: [(&[&str], i32); 5] = [
            (&["logc", "--eta", "1,2"], 0),
            (&["sample", "--eta", "1", "--n", "0", "--seed", "1"], 2),
            (
                &[
                    "sample", "--eta", "-2,3", "--n", "3", "--method", "naive", "--budget", "1",
                    "--seed", "1",
                ],
                3,
            ),
            (&["fit", "--data", &zeros], 4),
            (&["fit", "--data", &skewed, "--max-iter", "1"], 5),
        ];
        for (args, expected) in cases {
            let got = code(args);
            ensure(got == expected, || {
                format!("{args:?}: exit {got}, expected {expected}")
            })?;
        }
        Ok(format!(
            "round trip worst |z| {worst_z:.2}; exit codes 0/2/3/4/5; outputs identical"
        ))
    });
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use contcat::inference::{
    bias_simulation, fit_mle_with, glm_fit, glm_predict, BiasConfig, Dataset, FitReport, GlmConfig,
    MleConfig, Truth,
};
use contcat::io::{
    component_header, format_f64, parse_list, read_compositions, read_predictors, write_bench_csv,
    write_bias_csv, write_points, write_rows,
};
use contcat::samplers::{
    benchmark_samplers, sample, sample_parallel, BenchConfig, BenchPrior, Method, SamplerKind,
    SamplerOptions,
};
use contcat::{
    covariance, log_normalizer, log_normalizer_lambda, log_pdf, mean, MeanParams, NaturalParams,
    SimplexPoint,
};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::{
    BenchArgs, BiasArgs, Cli, Command, Failure, FitArgs, MethodArg, Params, PriorArg, SampleArgs,
    SimulateArgs, EXIT_NO_CONVERGENCE,
};

type CmdResult = Result<(), Failure>;

pub fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Logc(a) => logc(&a.params),
        Command::Sample(a) => sample_cmd(a, cli.strict),
        Command::Moments(a) => moments(&a.params),
        Command::Fit(a) => fit(a, cli.strict),
        Command::BenchSamplers(a) => bench(a, cli.strict),
        Command::BiasSim(a) => bias(a, cli.strict),
        Command::SimulateGlm(a) => simulate_glm(a, cli.strict),
    }
}

fn resolve_seed(seed: Option<u64>, strict: bool) -> Result<u64, Failure> {
    match seed {
        Some(s) => Ok(s),
        None if strict => Err(Failure::usage("--seed is required with --strict")),
        None => {
            let s: u64 = rand::random();
            eprintln!("seed: {s}");
            Ok(s)
        }
    }
}

fn parse_flag_list(flag: &str, s: &str) -> Result<Vec<f64>, Failure> {
    parse_list(s).map_err(|e| Failure::usage(format!("{flag}: {e}")))
}

/// Natural parameters, plus the mean parameters when given as `--lambda`.
fn parse_params(p: &Params) -> Result<(NaturalParams, Option<MeanParams>), Failure> {
    if let Some(s) = &p.eta {
        let v = parse_flag_list("--eta", s)?;
        let eta = NaturalParams::new(v).map_err(|e| Failure::from_lib("--eta", e))?;
        return Ok((eta, None));
    }
    let s = p.lambda.as_deref().unwrap_or_default();
    let v = parse_flag_list("--lambda", s)?;
    let lam = MeanParams::new(v).map_err(|e| Failure::from_lib("--lambda", e))?;
    Ok((lam.to_natural(), Some(lam)))
}

fn method(m: MethodArg) -> Method {
    match m {
        MethodArg::Naive => Method::Naive,
        MethodArg::Ordered => Method::Ordered,
        MethodArg::Permutation => Method::Permutation,
        MethodArg::Auto => Method::Auto,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure {
        code: 1,
        message: format!("cannot create {}: {e}", path.display()),
    })
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn finish(mut w: Box<dyn Write>) -> CmdResult {
    w.flush().map_err(|e| Failure {
        code: 1,
        message: format!("write failed: {e}"),
    })
}

fn open(flag: &str, path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::usage(format!("{flag} {}: {e}", path.display())))
}

fn logc(p: &Params) -> CmdResult {
    let (eta, lam) = parse_params(p)?;
    // Adding zero turns a negative zero into a positive one.
    let lc = log_normalizer(&eta).value() + 0.0;
    println!("log_c,{}", format_f64(lc));
    println!("c,{}", format_f64(lc.exp()));
    if let Some(lam) = lam {
        let v = log_normalizer_lambda(&lam);
        println!("log_c_lambda,{}", format_f64(v));
        println!("c_lambda,{}", format_f64(v.exp()));
    }
    Ok(())
}

fn sample_cmd(a: &SampleArgs, strict: bool) -> CmdResult {
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    if a.workers == 0 {
        return Err(Failure::usage("--workers must be at least 1"));
    }
    let (eta, _) = parse_params(&a.params)?;
    let seed = resolve_seed(a.seed, strict)?;
    let m = method(a.method);
    let opts = SamplerOptions {
        budget: a.budget,
        ..Default::default()
    };
    let batch = sample_parallel(m, &eta, a.n, seed, a.workers, &opts)?;
    let mut w = output(a.out.as_ref())?;
    write_points(&mut w, &batch.points)?;
    finish(w)?;
    let total = batch.total_proposals();
    eprintln!("sampler: {}", m.resolve(&eta));
    eprintln!("samples: {}", batch.len());
    eprintln!("proposals: {total}");
    eprintln!("acceptance_rate: {}", format_f64(batch.acceptance_rate()));
    eprintln!(
        "proposals_per_acceptance: {}",
        format_f64(total as f64 / batch.len() as f64)
    );
    Ok(())
}

fn moments(p: &Params) -> CmdResult {
    let (eta, _) = parse_params(p)?;
    let k = eta.k();
    let m = mean(&eta);
    let free = covariance(&eta);
    // Extend to all K components: the last one is minus the sum of the others.
    let mut cov = DMatrix::zeros(k, k);
    cov.view_mut((0, 0), (k - 1, k - 1)).copy_from(&free);
    for i in 0..k - 1 {
        let c = -free.row(i).sum();
        cov[(i, k - 1)] = c;
        cov[(k - 1, i)] = c;
    }
    cov[(k - 1, k - 1)] = free.sum();
    let row = |label: String, v: &mut dyn Iterator<Item = f64>| {
        let mut s = label;
        for x in v {
            s.push(',');
            s.push_str(&format_f64(x));
        }
        println!("{s}");
    };
    println!("statistic,{}", component_header(k).join(","));
    row("mean".into(), &mut m.iter().cloned());
    for i in 0..k {
        row(format!("cov_x{}", i + 1), &mut cov.row(i).iter().cloned());
    }
    Ok(())
}

struct Holdout {
    train: Vec<usize>,
    test: Vec<usize>,
}

fn split(n: usize, fraction: f64, seed: Option<u64>, strict: bool) -> Result<Holdout, Failure> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Failure::usage("--holdout must be in [0, 1)"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if fraction == 0.0 {
        return Ok(Holdout {
            train: idx,
            test: Vec::new(),
        });
    }
    let n_test = (n as f64 * fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(Failure::usage(format!(
            "--holdout {fraction} leaves an empty split of {n} rows"
        )));
    }
    let seed = resolve_seed(seed, strict)?;
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n - n_test);
    Ok(Holdout { train: idx, test })
}

fn subset_rows(rows: &[SimplexPoint], idx: &[usize]) -> Vec<SimplexPoint> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

fn subset_matrix(z: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), z.ncols(), |r, c| z[(idx[r], c)])
}

/// MAE, RMSE and log-likelihood of predicted means on held-out rows.
fn holdout_metrics(pred: &[(NaturalParams, Vec<f64>)], y: &[SimplexPoint]) -> Value {
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut ll = 0.0;
    let mut count = 0usize;
    for ((eta, mu), y) in pred.iter().zip(y) {
        for (a, b) in mu.iter().zip(y.as_slice()) {
            abs += (a - b).abs();
            sq += (a - b) * (a - b);
            count += 1;
        }
        ll += log_pdf(y, eta).unwrap_or(f64::NAN);
    }
    json!({
        "n": y.len(),
        "mae": abs / count as f64,
        "rmse": (sq / count as f64).sqrt(),
        "log_likelihood": ll,
    })
}

fn fit(a: &FitArgs, strict: bool) -> CmdResult {
    if !(a.l2 >= 0.0 && a.l2.is_finite()) {
        return Err(Failure::usage("--l2 must be nonnegative and finite"));
    }
    let table = read_compositions(open("--data", &a.data)?, a.smooth)
        .map_err(|e| Failure::from_lib("--data", e))?;
    for (line, reason) in &table.rejected {
        eprintln!("rejected line {line}: {reason}");
    }
    if !table.rejected.is_empty() {
        eprintln!("rejected rows: {}", table.rejected.len());
    }
    if table.rows.is_empty() {
        return Err(Failure::usage(format!(
            "--data {}: no valid rows",
            a.data.display()
        )));
    }
    let k = table.k().unwrap_or(0);
    let holdout = split(table.rows.len(), a.holdout, a.seed, strict)?;
    let train_y = subset_rows(&table.rows, &holdout.train);
    let test_y = subset_rows(&table.rows, &holdout.test);

    let (report, model) = match &a.predictors {
        None => {
            let mut cfg = MleConfig::default();
            if let Some(m) = a.max_iter {
                cfg.max_iter = m;
            }
            if let Some(t) = a.tolerance {
                cfg.tolerance = t;
            }
            let data = Dataset::new(train_y)?;
            let fit = fit_mle_with(&data, &cfg)?;
            let mut report = mle_report(&fit, k, data.len());
            if !test_y.is_empty() {
                let m = mean(&fit.params);
                let pred = vec![(fit.params.clone(), m); test_y.len()];
                report["holdout"] = holdout_metrics(&pred, &test_y);
            }
            let model = json!({
                "model": "mle",
                "eta": fit.params.as_slice(),
                "lambda": fit.params.to_mean().as_slice(),
            });
            (with_status(report, &fit, &table.rejected), model)
        }
        Some(path) => {
            let z = read_predictors(open("--predictors", path)?)
                .map_err(|e| Failure::from_lib("--predictors", e))?
                .values;
            let total = table.rows.len() + table.rejected.len();
            if z.nrows() != total {
                return Err(Failure::usage(format!(
                    "--predictors has {} rows but --data has {total}",
                    z.nrows()
                )));
            }
            // Keep predictor rows aligned with the accepted composition rows.
            let z = subset_matrix(&z, &table.row_index);
            let mut cfg = GlmConfig {
                l2: a.l2,
                standardize: !a.raw,
                ..Default::default()
            };
            if let Some(m) = a.max_iter {
                cfg.max_iter = m;
            }
            if let Some(t) = a.tolerance {
                cfg.tolerance = t;
            }
            let z_train = subset_matrix(&z, &holdout.train);
            let data = Dataset::with_predictors(train_y, z_train.clone())?;
            let fit = glm_fit(&data, &cfg)?;
            let (w, b) = fit.params.raw_weights();
            let weights: Vec<Vec<f64>> =
                w.row_iter().map(|r| r.iter().cloned().collect()).collect();
            let fitted = glm_predict(&fit.params, &z_train)?;
            let mut avg = vec![0.0; k];
            for (_, mu) in &fitted {
                for (s, v) in avg.iter_mut().zip(mu) {
                    *s += v / fitted.len() as f64;
                }
            }
            let mut report = json!({
                "model": "glm",
                "n": data.len(),
                "k": k,
                "predictors": z.ncols(),
                "l2": a.l2,
                "weights": weights,
                "bias": b,
                "mean": avg,
                "log_likelihood": fit.log_likelihood,
                "iterations": fit.iterations,
                "grad_norm": fit.grad_norm,
                "converged": fit.converged,
            });
            if !test_y.is_empty() {
                let pred = glm_predict(&fit.params, &subset_matrix(&z, &holdout.test))?;
                report["holdout"] = holdout_metrics(&pred, &test_y);
            }
            let mut model = serde_json::to_value(&fit.params).map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
            model["model"] = json!("glm");
            model["raw_weights"] = json!(weights);
            model["raw_bias"] = json!(b);
            (with_status(report, &fit, &table.rejected), model)
        }
    };

    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(path) = &a.out {
        let mut w = create(path)?;
        let body = serde_json::to_string_pretty(&model).expect("model serializes");
        writeln!(w, "{body}")
            .and_then(|_| w.flush())
            .map_err(|e| Failure {
                code: 1,
                message: format!("write failed: {e}"),
            })?;
    }
    if !report["converged"].as_bool().unwrap_or(false) {
        return Err(Failure {
            code: EXIT_NO_CONVERGENCE,
            message: format!(
                "fit did not converge after {} iterations (gradient norm {})",
                report["iterations"], report["grad_norm"]
            ),
        });
    }
    Ok(())
}

fn mle_report(fit: &FitReport<NaturalParams>, k: usize, n: usize) -> Value {
    json!({
        "model": "mle",
        "n": n,
        "k": k,
        "eta": fit.params.as_slice(),
        "lambda": fit.params.to_mean().as_slice(),
        "mean": mean(&fit.params),
        "log_likelihood": fit.log_likelihood,
        "iterations": fit.iterations,
        "grad_norm": fit.grad_norm,
        "converged": fit.converged,
    })
}

fn with_status<P>(mut report: Value, fit: &FitReport<P>, rejected: &[(usize, String)]) -> Value {
    report["rejected_rows"] = json!(rejected.len());
    report["converged"] = json!(fit.converged);
    report
}

fn bench(a: &BenchArgs, strict: bool) -> CmdResult {
    if a.kmin < 2 || a.kmin > a.kmax || a.kmax > 12 {
        return Err(Failure::usage(format!(
            "need 2 <= --kmin <= --kmax <= 12, got {}..{}",
            a.kmin, a.kmax
        )));
    }
    if a.trials == 0 || a.budget == 0 || a.workers == 0 {
        return Err(Failure::usage(
            "--trials, --budget and --workers must be positive",
        ));
    }
    if let Some(al) = a.alpha {
        if !(al > 0.0 && al.is_finite()) {
            return Err(Failure::usage("--alpha must be positive"));
        }
    }
    let seed = resolve_seed(a.seed, strict)?;
    let cfg = BenchConfig {
        k_values: (a.kmin..=a.kmax).collect(),
        trials: a.trials,
        prior: match a.prior {
            PriorArg::Dirichlet => BenchPrior::Dirichlet(a.alpha),
            PriorArg::Uniform => BenchPrior::FixedUniform,
        },
        budget: a.budget,
        seed,
        samplers: SamplerKind::ALL.to_vec(),
        workers: a.workers,
    };
    let records = benchmark_samplers(&cfg)?;
    let mut w = output(a.out.as_ref())?;
    write_bench_csv(&mut w, &records)?;
    finish(w)?;
    for k in cfg.k_values {
        let mut parts = Vec::new();
        for s in SamplerKind::ALL {
            let mut v: Vec<u64> = records
                .iter()
                .filter(|r| r.k == k && r.sampler == s)
                .map(|r| r.proposals)
                .collect();
            v.sort_unstable();
            let censored = records
                .iter()
                .filter(|r| r.k == k && r.sampler == s && r.censored)
                .count();
            parts.push(format!("{s} median {} censored {censored}", v[v.len() / 2]));
        }
        eprintln!("K={k}: {}", parts.join("; "));
    }
    Ok(())
}

fn bias(a: &BiasArgs, strict: bool) -> CmdResult {
    if a.nmin == 0 || a.nmin > a.nmax || a.nstep == 0 {
        return Err(Failure::usage(
            "need 1 <= --nmin <= --nmax and --nstep >= 1",
        ));
    }
    let truth = match &a.truth_lambda {
        Some(s) => {
            let v = parse_flag_list("--truth-lambda", s)?;
            Truth::Fixed(MeanParams::new(v).map_err(|e| Failure::from_lib("--truth-lambda", e))?)
        }
        None => Truth::UniformPrior { k: a.k },
    };
    let seed = resolve_seed(a.seed, strict)?;
    let mut cfg = BiasConfig::new(truth, (a.nmin..=a.nmax).step_by(a.nstep).collect());
    cfg.trials = a.trials;
    cfg.block_size = a.block_size;
    cfg.method = method(a.method);
    cfg.refit = a.refit;
    cfg.workers = a.workers.max(1);
    cfg.seed = seed;
    let rows = bias_simulation(&cfg)?;
    let mut w = output(a.out.as_ref())?;
    write_bias_csv(&mut w, &rows)?;
    finish(w)?;
    let worst = rows
        .iter()
        .map(|r| (r.bias / r.se).abs())
        .fold(0.0, f64::max);
    eprintln!(
        "rows: {}; largest |bias| / se: {}",
        rows.len(),
        format_f64(worst)
    );
    Ok(())
}

fn parse_weights(s: &str) -> Result<Vec<Vec<f64>>, Failure> {
    let rows: Vec<Vec<f64>> = s
        .split(';')
        .map(|r| parse_flag_list("--weights", r))
        .collect::<Result<_, _>>()?;
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Failure::usage("--weights: rows differ in length"));
    }
    Ok(rows)
}

fn simulate_glm(a: &SimulateArgs, strict: bool) -> CmdResult {
    if a.n == 0 {
        return Err(Failure::usage("--n must be at least 1"));
    }
    let seed = resolve_seed(a.seed, strict)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |scale: f64| scale * rng.sample::<f64, _>(StandardNormal);
    let weights = match &a.weights {
        Some(s) => parse_weights(s)?,
        None => {
            if a.k < 2 {
                return Err(Failure::usage("--k must be at least 2"));
            }
            (0..a.d)
                .map(|_| (0..a.k - 1).map(|_| normal(a.scale)).collect())
                .collect()
        }
    };
    let d = weights.len();
    let m = weights.first().map_or(a.k - 1, Vec::len);
    let bias = match &a.bias {
        Some(s) => parse_flag_list("--bias", s)?,
        None => (0..m).map(|_| normal(a.scale)).collect(),
    };
    if bias.len() != m || m == 0 {
        return Err(Failure::usage(format!(
            "--bias needs {m} values to match the weights"
        )));
    }
    let z: Vec<Vec<f64>> = (0..a.n)
        .map(|_| (0..d).map(|_| normal(1.0)).collect())
        .collect();
    let opts = SamplerOptions::default();
    let mut points = Vec::with_capacity(a.n);
    for zr in &z {
        let eta: Vec<f64> = (0..m)
            .map(|j| bias[j] + zr.iter().zip(&weights).map(|(x, w)| x * w[j]).sum::<f64>())
            .collect();
        let eta = NaturalParams::new(eta).map_err(|e| Failure::from_lib("--weights", e))?;
        let batch = sample(Method::Auto, &eta, 1, &mut rng, &opts)?;
        points.extend(batch.points);
    }
    let mut w = create(&a.out)?;
    write_points(&mut w, &points)?;
    finish(Box::new(w))?;
    let header: Vec<String> = (1..=d).map(|i| format!("z{i}")).collect();
    let mut w = create(&a.predictors_out)?;
    write_rows(&mut w, Some(&header), &z)?;
    finish(Box::new(w))?;
    if let Some(path) = &a.truth_out {
        let mut w = create(path)?;
        let body = json!({ "weights": weights, "bias": bias, "seed": seed });
        writeln!(
            w,
            "{}",
            serde_json::to_string_pretty(&body).expect("truth serializes")
        )
        .and_then(|_| w.flush())
        .map_err(|e| Failure {
            code: 1,
            message: format!("write failed: {e}"),
        })?;
    }
    eprintln!("rows: {}; categories: {}; predictors: {d}", a.n, m + 1);
    Ok(())
}

//! Regression with the canonical link: `eta_i = W^T z_i + b`.
//!
//! The penalized log-likelihood
//! `sum_i [log C(eta_i) + eta_i . y_i] - l2 (|W|^2 + |b|^2)` is concave, and
//! the score of row `i` with respect to `eta_i` is `y_i - E[x | eta_i]`
//! (first `K - 1` components), chained through the linear map.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::mle::{FitReport, TraceEntry};
use super::Dataset;
use crate::distribution::{log_normalizer_and_mean, mean};
use crate::error::{Error, Result};
use crate::params::{NaturalParams, SimplexPoint};

/// How each iteration picks its first trial step before backtracking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepRule {
    /// Barzilai-Borwein step from the last two iterates.
    BarzilaiBorwein,
    /// The same initial step every iteration.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmConfig {
    pub step: StepRule,
    pub max_iter: usize,
    /// Convergence threshold on the infinity norm of the gradient.
    pub tolerance: f64,
    pub l2: f64,
    /// Z-score predictor columns before fitting.
    pub standardize: bool,
}

impl Default for GlmConfig {
    fn default() -> Self {
        Self {
            step: StepRule::BarzilaiBorwein,
            max_iter: 500,
            tolerance: 1e-6,
            l2: 0.0,
            standardize: true,
        }
    }
}

/// Column centering and scaling applied to predictors before the linear map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    fn fit(z: &DMatrix<f64>) -> Self {
        let n = z.nrows() as f64;
        let mut center = Vec::with_capacity(z.ncols());
        let mut scale = Vec::with_capacity(z.ncols());
        for col in z.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = var.sqrt();
            center.push(m);
            scale.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Self { center, scale }
    }

    fn apply(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = z.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.iter_mut()
                .for_each(|v| *v = (*v - self.center[j]) / self.scale[j]);
        }
        out
    }
}

/// A fitted regression. `weights` is `d x (K - 1)`, stored by row, and acts
/// on standardized predictors when `standardization` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub l2: f64,
    pub standardization: Option<Standardization>,
}

impl GlmModel {
    /// The all-zero model over `d` predictors and `k` categories.
    pub fn zeros(d: usize, k: usize) -> Self {
        Self {
            weights: vec![vec![0.0; k - 1]; d],
            bias: vec![0.0; k - 1],
            l2: 0.0,
            standardization: None,
        }
    }

    pub fn n_predictors(&self) -> usize {
        self.weights.len()
    }

    pub fn k(&self) -> usize {
        self.bias.len() + 1
    }

    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let d = self.weights.len();
        DMatrix::from_fn(d, self.bias.len(), |i, j| self.weights[i][j])
    }

    /// Weights and bias acting on raw (unstandardized) predictors.
    pub fn raw_weights(&self) -> (DMatrix<f64>, Vec<f64>) {
        let mut w = self.weight_matrix();
        let mut b = self.bias.clone();
        if let Some(s) = &self.standardization {
            for (i, mut row) in w.row_iter_mut().enumerate() {
                row /= s.scale[i];
                for (bj, wij) in b.iter_mut().zip(row.iter()) {
                    *bj -= s.center[i] * wij;
                }
            }
        }
        (w, b)
    }

    fn from_theta(theta: &[f64], d: usize, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let weights = (0..d).map(|i| theta[i * m..(i + 1) * m].to_vec()).collect();
        (weights, theta[d * m..].to_vec())
    }
}

/// The penalized log-likelihood over a flat parameter vector: `W` row by
/// row (`d x (K - 1)`), then `b`.
pub struct GlmObjective<'a> {
    z: &'a DMatrix<f64>,
    y: &'a [SimplexPoint],
    l2: f64,
}

impl<'a> GlmObjective<'a> {
    /// `z` must already be standardized if the model standardizes.
    pub fn new(z: &'a DMatrix<f64>, y: &'a [SimplexPoint], l2: f64) -> Result<Self> {
        if z.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: z.nrows(),
            });
        }
        if y.is_empty() {
            return Err(Error::InvalidArgument("no rows".into()));
        }
        Ok(Self { z, y, l2 })
    }

    pub fn k(&self) -> usize {
        self.y[0].k()
    }

    pub fn dim(&self) -> usize {
        (self.z.ncols() + 1) * (self.k() - 1)
    }

    fn row_eta(&self, theta: &[f64], row: usize) -> Result<NaturalParams> {
        let d = self.z.ncols();
        let m = self.k() - 1;
        let eta: Vec<f64> = (0..m)
            .map(|j| {
                let mut e = theta[d * m + j];
                for l in 0..d {
                    e += self.z[(row, l)] * theta[l * m + j];
                }
                e
            })
            .collect();
        NaturalParams::new(eta).map_err(|_| Error::NonFiniteLoss { row })
    }

    fn penalty(&self, theta: &[f64]) -> f64 {
        self.l2 * theta.iter().map(|t| t * t).sum::<f64>()
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        self.value_and_gradient(theta).map(|(v, _)| v)
    }

    pub fn gradient(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.value_and_gradient(theta).map(|(_, g)| g)
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        if theta.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: theta.len(),
            });
        }
        let d = self.z.ncols();
        let m = self.k() - 1;
        let mut value = 0.0;
        let mut grad = vec![0.0; theta.len()];
        for (row, y) in self.y.iter().enumerate() {
            let eta = self.row_eta(theta, row)?;
            let (log_c, mu) = log_normalizer_and_mean(&eta);
            let y = y.as_slice();
            let lin: f64 = eta.as_slice().iter().zip(y).map(|(e, yj)| e * yj).sum();
            let v = log_c + lin;
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss { row });
            }
            value += v;
            for j in 0..m {
                let s = y[j] - mu[j];
                for l in 0..d {
                    grad[l * m + j] += self.z[(row, l)] * s;
                }
                grad[d * m + j] += s;
            }
        }
        value -= self.penalty(theta);
        for (g, t) in grad.iter_mut().zip(theta) {
            *g -= 2.0 * self.l2 * t;
        }
        Ok((value, grad))
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Gradient ascent with backtracking from `W = 0`, `b = 0`. Running out of
/// iterations is not an error: the report has `converged = false`.
pub fn glm_fit(data: &Dataset, cfg: &GlmConfig) -> Result<FitReport<GlmModel>> {
    let z_raw = data
        .predictors()
        .ok_or_else(|| Error::InvalidArgument("regression needs a predictor matrix".into()))?;
    if !(cfg.l2 >= 0.0 && cfg.l2.is_finite()) {
        return Err(Error::OutOfRange {
            name: "l2",
            value: cfg.l2,
            reason: "must be nonnegative and finite",
        });
    }
    if let StepRule::Fixed(s) = cfg.step {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::OutOfRange {
                name: "step",
                value: s,
                reason: "must be positive and finite",
            });
        }
    }
    let standardization = cfg.standardize.then(|| Standardization::fit(z_raw));
    let z = match &standardization {
        Some(s) => s.apply(z_raw),
        None => z_raw.clone(),
    };
    let obj = GlmObjective::new(&z, data.rows(), cfg.l2)?;
    let d = z.ncols();
    let m = data.k() - 1;

    let mut theta = vec![0.0; obj.dim()];
    let (mut f, mut g) = obj.value_and_gradient(&theta)?;
    let mut gnorm = inf_norm(&g);
    let mut trace = vec![TraceEntry {
        log_likelihood: f,
        grad_norm: gnorm,
    }];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;

    while gnorm > cfg.tolerance && iterations < cfg.max_iter {
        iterations += 1;
        let mut alpha = match (cfg.step, &prev) {
            (StepRule::Fixed(s), _) => s,
            (StepRule::BarzilaiBorwein, None) => 1.0 / gnorm.max(1.0),
            (StepRule::BarzilaiBorwein, Some((tp, gp))) => {
                let mut ss = 0.0;
                let mut sy = 0.0;
                for i in 0..theta.len() {
                    let s = theta[i] - tp[i];
                    // Ascent on a concave function: g_prev - g pairs with s.
                    let y = gp[i] - g[i];
                    ss += s * s;
                    sy += s * y;
                }
                if sy > 0.0 {
                    (ss / sy).clamp(1e-10, 1e10)
                } else {
                    1.0 / gnorm.max(1.0)
                }
            }
        };
        let g2: f64 = g.iter().map(|v| v * v).sum();
        let slack = 8.0 * f64::EPSILON * f.abs().max(1.0);
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t + alpha * gi).collect();
            match obj.value_and_gradient(&cand) {
                Ok((fc, gc)) => {
                    // Sufficient increase, or a step that is flat within
                    // rounding but still shrinks the gradient.
                    if fc >= f + ARMIJO * alpha * g2 || (fc >= f - slack && inf_norm(&gc) < gnorm) {
                        accepted = Some((cand, fc, gc));
                        break;
                    }
                }
                Err(Error::NonFiniteLoss { .. }) => {}
                Err(e) => return Err(e),
            }
            alpha *= 0.5;
        }
        let Some((cand, fc, gc)) = accepted else {
            break;
        };
        prev = Some((
            std::mem::replace(&mut theta, cand),
            std::mem::replace(&mut g, gc),
        ));
        f = fc;
        gnorm = inf_norm(&g);
        trace.push(TraceEntry {
            log_likelihood: f,
            grad_norm: gnorm,
        });
    }

    let (weights, bias) = GlmModel::from_theta(&theta, d, m);
    Ok(FitReport {
        params: GlmModel {
            weights,
            bias,
            l2: cfg.l2,
            standardization,
        },
        log_likelihood: f,
        iterations,
        grad_norm: gnorm,
        converged: gnorm <= cfg.tolerance,
        trace,
    })
}

/// Natural parameters and mean vectors for each row of `z` (raw predictors).
pub fn glm_predict(model: &GlmModel, z: &DMatrix<f64>) -> Result<Vec<(NaturalParams, Vec<f64>)>> {
    if z.ncols() != model.n_predictors() {
        return Err(Error::DimensionMismatch {
            expected: model.n_predictors(),
            got: z.ncols(),
        });
    }
    let (w, b) = model.raw_weights();
    let mut out = Vec::with_capacity(z.nrows());
    for (row, zr) in z.row_iter().enumerate() {
        let eta: Vec<f64> = (0..b.len())
            .map(|j| {
                b[j] + zr
                    .iter()
                    .zip(w.column(j).iter())
                    .map(|(a, c)| a * c)
                    .sum::<f64>()
            })
            .collect();
        let eta = NaturalParams::new(eta).map_err(|_| Error::NonFiniteLoss { row })?;
        let mu = mean(&eta);
        out.push((eta, mu));
    }
    Ok(out)
}

//! The continuous Bernoulli distribution on `[0, 1]`, density proportional
//! to `lambda^x (1 - lambda)^(1 - x)`, or `exp(eta x)` with
//! `eta = log(lambda / (1 - lambda))`.
//!
//! Its inverse CDF is the building block of every sampler in this crate.
//! Writing `g(eta) = log(1 + (e^eta - 1) u)`, which is the cumulant
//! generating function of a Bernoulli(`u`) variable, the inverse CDF is
//! `g(eta) / eta`. Near `eta = 0` both the value and its derivative are
//! taken from the cumulant series instead.

use crate::error::{Error, Result};

/// Below this `|eta|` the inverse CDF uses its cumulant series. Equivalent to
/// `|2 lambda - 1| < 1e-6`.
const VALUE_SERIES_BELOW: f64 = 2e-6;

/// Below this `|eta|` the derivative uses its cumulant series.
const DERIV_SERIES_BELOW: f64 = 5e-3;

/// Above this `|eta|` `e^eta` is avoided altogether.
const LARGE_ETA: f64 = 30.0;

/// Natural parameter `log(lambda / (1 - lambda))`.
pub fn cb_natural(lam: f64) -> f64 {
    lam.ln() - (-lam).ln_1p()
}

/// Bernoulli(`u`) cumulants `kappa_2..kappa_6`.
fn cumulants(u: f64) -> [f64; 5] {
    let k2 = u * (1.0 - u);
    let s = 1.0 - 2.0 * u;
    let k3 = k2 * s;
    let k4 = k2 * (1.0 - 6.0 * k2);
    let k5 = k3 * (1.0 - 12.0 * k2);
    let k6 = k2 * (1.0 - 30.0 * k2 + 120.0 * k2 * k2);
    [k2, k3, k4, k5, k6]
}

/// `F^{-1}(u)` for the continuous Bernoulli with natural parameter `eta`.
///
/// Monotone in `u`, maps `0 -> 0` and `1 -> 1`, and the result is clamped to
/// `[0, 1]`. No argument checks; callers guarantee `u` in `[0, 1]` and finite
/// `eta`.
#[inline]
pub fn cb_inverse_cdf_natural(u: f64, eta: f64) -> f64 {
    let x = if eta.abs() < VALUE_SERIES_BELOW {
        let [k2, k3, k4, ..] = cumulants(u);
        u + eta * (k2 / 2.0 + eta * (k3 / 6.0 + eta * k4 / 24.0))
    } else if eta > LARGE_ETA {
        // 1 + (e^eta - 1) u = e^eta (u + (1 - u) e^-eta)
        1.0 + (u + (1.0 - u) * (-eta).exp()).ln() / eta
    } else if eta < -LARGE_ETA {
        ((1.0 - u) + u * eta.exp()).ln() / eta
    } else {
        (eta.exp_m1() * u).ln_1p() / eta
    };
    x.clamp(0.0, 1.0)
}

/// `F^{-1}(u)` for the continuous Bernoulli with mean-type parameter `lam`.
pub fn cb_inverse_cdf(u: f64, lam: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::OutOfRange {
            name: "u",
            value: u,
            reason: "must lie in [0, 1]",
        });
    }
    if !(lam > 0.0 && lam < 1.0) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lam,
            reason: "must lie in (0, 1)",
        });
    }
    Ok(cb_inverse_cdf_natural(u, cb_natural(lam)))
}

/// CDF `(e^{eta x} - 1) / (e^eta - 1)` for `x` in `[0, 1]`.
pub fn cb_cdf_natural(x: f64, eta: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if eta == 0.0 {
        x
    } else if eta > 1.0 {
        (eta * (x - 1.0)).exp() * (-(-eta * x).exp_m1()) / (-(-eta).exp_m1())
    } else {
        (eta * x).exp_m1() / eta.exp_m1()
    }
}

/// `d F^{-1}(u; eta) / d eta` at fixed `u`.
pub fn cb_inverse_cdf_deta(u: f64, eta: f64) -> f64 {
    if eta.abs() < DERIV_SERIES_BELOW {
        let [k2, k3, k4, k5, k6] = cumulants(u);
        return k2 / 2.0
            + eta * (k3 / 3.0 + eta * (k4 / 8.0 + eta * (k5 / 30.0 + eta * k6 / 144.0)));
    }
    // g = log(1 + (e^eta - 1) u), g' = u e^eta / (1 + (e^eta - 1) u)
    let (g, dg) = if eta > 0.0 {
        let w = u + (1.0 - u) * (-eta).exp();
        (eta + w.ln(), u / w)
    } else {
        let e = eta.exp();
        let w = (1.0 - u) + u * e;
        (w.ln(), u * e / w)
    };
    (dg * eta - g) / (eta * eta)
}

/// `d F^{-1}(u; lam) / d lam` at fixed `u`.
pub fn cb_inverse_cdf_dlambda(u: f64, lam: f64) -> f64 {
    cb_inverse_cdf_deta(u, cb_natural(lam)) / (lam * (1.0 - lam))
}

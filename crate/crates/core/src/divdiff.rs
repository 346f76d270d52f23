//! Divided differences of the exponential function.
//!
//! For nodes `z_0, ..., z_n` the divided difference `exp[z_0, ..., z_n]`
//! is the `(n, 0)` entry of `exp(Z)`, where `Z` is lower bidiagonal with the
//! nodes on its diagonal and ones below it. Evaluating it that way, rather
//! than through the alternating closed-form sum, keeps full relative accuracy
//! for clustered and repeated nodes:
//!
//! 1. shift by the largest node, so nothing overflows;
//! 2. scale `Z` by `2^-s` and add a multiple of the identity, giving a
//!    matrix with nonnegative entries and norm at most one half;
//! 3. sum its Taylor series, then square `s` times.
//!
//! Every step adds and multiplies nonnegative numbers only, so each entry of
//! the result carries a relative error of a few dozen ulps regardless of how
//! the nodes are arranged. Repeated nodes need no special handling, which is
//! what the confluent moment formulas rely on.

/// Upper bound on the infinity norm of the scaled matrix fed to the Taylor
/// series.
const SCALED_NORM: f64 = 0.5;

const MAX_TAYLOR_TERMS: usize = 200;

/// `ln exp[z_0, ..., z_n]`.
///
/// Symmetric in the nodes and continuous across coincidences. Panics on an
/// empty slice; nodes must be finite.
pub fn log_exp_divided_difference(nodes: &[f64]) -> f64 {
    let n = nodes.len();
    assert!(n > 0, "divided difference needs at least one node");
    debug_assert!(nodes.iter().all(|z| z.is_finite()));

    let (lo, hi) = nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &z| {
            (lo.min(z), hi.max(z))
        });
    if n == 1 {
        return hi;
    }
    let spread = hi - lo;

    let mut squarings = 0u32;
    let mut scale = 1.0f64;
    while (spread + 1.0) / scale > SCALED_NORM {
        squarings += 1;
        scale *= 2.0;
    }

    // exp((Z - hi I) / scale) = exp(-spread / scale) * exp(A) with
    // A = (Z - hi I + spread I) / scale >= 0 entrywise.
    let mut a = LowerTri::zeros(n);
    for (i, &z) in nodes.iter().enumerate() {
        a.set(i, i, (z - hi + spread) / scale);
        if i > 0 {
            a.set(i, i - 1, 1.0 / scale);
        }
    }

    let mut t = taylor_exp(&a);
    let mut log_factor = -spread / scale;
    for _ in 0..squarings {
        t = t.square();
        log_factor *= 2.0;
        let m = t.max_entry();
        t.scale(1.0 / m);
        log_factor += m.ln();
    }
    hi + log_factor + t.get(n - 1, 0).ln()
}

/// Taylor series of `exp(a)` for an entrywise nonnegative `a` with small
/// norm; stops once every new term is negligible against its partial sum.
fn taylor_exp(a: &LowerTri) -> LowerTri {
    let n = a.n;
    let mut sum = LowerTri::identity(n);
    let mut term = LowerTri::identity(n);
    for p in 1..MAX_TAYLOR_TERMS {
        term = term.mul(a);
        term.scale(1.0 / p as f64);
        sum.add_assign(&term);
        // Entry (i, j) first receives a contribution at p = i - j, so all
        // entries are populated once p reaches n - 1.
        if p + 1 >= n && term.negligible_against(&sum) {
            break;
        }
    }
    sum
}

/// Dense storage for a lower-triangular square matrix.
#[derive(Debug, Clone)]
struct LowerTri {
    n: usize,
    data: Vec<f64>,
}

impl LowerTri {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut acc = 0.0;
                for k in j..=i {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    fn square(&self) -> Self {
        self.mul(self)
    }

    fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn max_entry(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    fn negligible_against(&self, sum: &Self) -> bool {
        self.data
            .iter()
            .zip(&sum.data)
            .all(|(t, s)| *t <= f64::EPSILON * 0.25 * *s)
    }
}

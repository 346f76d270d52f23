//! Adaptive Gauss-Kronrod (7/15) quadrature and its nesting over the simplex
//! `{x >= 0, x_1 + ... + x_d <= 1}`.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err) = kronrod(f, a, b);
    // Also stop once the error estimate is at the rounding level of the value.
    if err <= tol.max(1e-15 * value.abs()) || depth >= MAX_DEPTH || (b - a).abs() < 1e-15 {
        return value;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth + 1) + adapt(f, m, b, 0.5 * tol, depth + 1)
}

/// `integral_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&mut f, a, b, tol, 0)
}

fn nested(f: &dyn Fn(&[f64]) -> f64, prefix: &mut Vec<f64>, dim: usize, tol: f64) -> f64 {
    let used: f64 = prefix.iter().sum();
    let upper = (1.0 - used).max(0.0);
    if prefix.len() + 1 == dim {
        return integrate(
            |t| {
                prefix.push(t);
                let v = f(prefix);
                prefix.pop();
                v
            },
            0.0,
            upper,
            tol,
        );
    }
    // Inner integrals are computed more tightly than the outer one.
    let inner_tol = tol * 1e-2;
    let mut inner = |t: f64| {
        prefix.push(t);
        let v = nested(f, prefix, dim, inner_tol);
        prefix.pop();
        v
    };
    let mut g = |t: f64| inner(t);
    adapt(&mut g, 0.0, upper, tol, 0)
}

/// Integral of `f(x_1, ..., x_dim)` over the `dim`-dimensional unit simplex,
/// to roughly absolute tolerance `tol`.
pub fn simplex_integral(dim: usize, f: &dyn Fn(&[f64]) -> f64, tol: f64) -> f64 {
    assert!(dim >= 1);
    let mut prefix = Vec::with_capacity(dim);
    nested(f, &mut prefix, dim, tol)
}

/// Inverts a monotone increasing `cdf` on `[0, 1]` by bisection.
pub fn bisect_inverse<F: Fn(f64) -> f64>(cdf: F, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

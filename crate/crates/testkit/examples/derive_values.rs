//! Prints the reference values frozen into the contcat test suites.
//!
//! Run with `cargo run -p contcat-testkit --example derive_values`.

use contcat_testkit::{hp, quad};

fn main() {
    // Normalizer for eta = (1, 2), K = 3.
    let integral = quad::simplex_integral(2, &|x| (x[0] + 2.0 * x[1]).exp(), 1e-14);
    println!("C(1,2)            quad = {:.15}", 1.0 / integral);
    println!(
        "C(1,2)              hp = {:.15}",
        (hp::ln_normalizer(&[1.0, 2.0], 7)).exp()
    );
    println!(
        "log C(1,2)          hp = {:.15}",
        hp::ln_normalizer(&[1.0, 2.0], 7)
    );
    println!(
        "log p((.2,.3,.5))      = {:.15}",
        hp::ln_normalizer(&[1.0, 2.0], 7) + 0.8
    );

    // K = 2, eta = 3.
    let i3 = quad::integrate(|x| (3.0 * x).exp(), 0.0, 1.0, 1e-15);
    println!("C(3)              quad = {:.15}", 1.0 / i3);

    // K = 2, eta = 20 mean.
    let z = quad::integrate(|x| (20.0 * x).exp(), 0.0, 1.0, 1e-12);
    let m = quad::integrate(|x| x * (20.0 * x).exp(), 0.0, 1.0, 1e-12) / z;
    println!("mean(20)          quad = {:.15}", m);

    // KL(eta_p = 0 || eta_q = 2), K = 2.
    let cq = 1.0 / quad::integrate(|x| (2.0 * x).exp(), 0.0, 1.0, 1e-15);
    let kl = quad::integrate(|x| -(cq * (2.0 * x).exp()).ln(), 0.0, 1.0, 1e-15);
    println!("KL(0||2)          quad = {:.15}", kl);

    // MGF at eta = 0, t = 1.
    println!(
        "M(1)              quad = {:.15}",
        quad::integrate(|x| x.exp(), 0.0, 1.0, 1e-15)
    );
    // MGF at eta = (1, 2), t = (-1, -2): C(1,2) / C(0,0).
    println!("M(-1,-2)          quad = {:.15}", (1.0 / integral) / 2.0);

    // Continuous Bernoulli inverse CDF at lambda = 0.8, u = 0.5.
    let dens = |x: f64| 0.8f64.powf(x) * 0.2f64.powf(1.0 - x);
    let total = quad::integrate(dens, 0.0, 1.0, 1e-16);
    let cdf = |t: f64| quad::integrate(dens, 0.0, t, 1e-16) / total;
    println!(
        "CB^-1(0.5; 0.8)   quad = {:.15}",
        quad::bisect_inverse(cdf, 0.5)
    );

    // lambda-parameterized constant at (0.5, 0.25, 0.25).
    let lam = [0.5f64, 0.25, 0.25];
    let il = quad::simplex_integral(
        2,
        &|x| lam[0].powf(x[0]) * lam[1].powf(x[1]) * lam[2].powf(1.0 - x[0] - x[1]),
        1e-15,
    );
    println!("log C_lambda        quad = {:.15}", -il.ln());
    println!(
        "bridge log C(eta) - log lam_K = {:.15}",
        hp::ln_normalizer(&[2f64.ln(), 0.0], 3) - 0.25f64.ln()
    );

    // Naive acceptance at eta = (1, -2, 3).
    let eta = [1.0f64, -2.0, 3.0];
    let factors: f64 = eta.iter().map(|e| e / (e.exp() - 1.0)).product();
    println!(
        "naive rate(1,-2,3)  hp = {:.15}",
        factors * (-hp::ln_normalizer(&eta, 5)).exp()
    );
}

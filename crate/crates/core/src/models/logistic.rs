//! Bivariate logistic (Gumbel) model.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

/// `(x1^(1/theta) + x2^(1/theta))^theta`, scaled by the larger coordinate so
/// small `theta` does not overflow.
pub(super) fn stdf(theta: f64, x1: f64, x2: f64) -> f64 {
    let m = x1.max(x2);
    if m == 0.0 {
        return 0.0;
    }
    let inv = 1.0 / theta;
    m * ((x1 / m).powf(inv) + (x2 / m).powf(inv)).powf(theta)
}

/// `theta * ln S` for `S` positive stable with Laplace transform
/// `exp(-t^theta)`, by Kanter's representation. Working with `theta ln S`
/// keeps tiny `theta` finite.
fn scaled_log_positive_stable<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> f64 {
    if theta >= 1.0 {
        return 0.0;
    }
    let u: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let e: f64 = Exp1.sample(rng);
    let a = theta;
    a * (a * u).sin().ln() - u.sin().ln() + (1.0 - a) * (((1.0 - a) * u).sin().ln() - e.ln())
}

/// Marshall–Olkin frailty draw of the Gumbel copula with generator
/// `exp(-t^theta)`: `U_j = exp(-(E_j / S)^theta)`. Emits the Gumbel-scale
/// transform `-ln(-ln U_j) = theta (ln S - ln E_j)`, which is increasing in
/// `U_j` and exact in floating point.
pub(super) fn sample<R: Rng + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let log_s = scaled_log_positive_stable(theta, rng);
        for _ in 0..2 {
            let e: f64 = Exp1.sample(rng);
            out.push(log_s - theta * e.ln());
        }
    }
    out
}

//! Bivariate Clayton copula.

use rand::Rng;

/// Lower tail copula `(x1^-theta + x2^-theta)^(-1/theta)`, zero on the axes.
pub(super) fn lower_tail_copula(theta: f64, x1: f64, x2: f64) -> f64 {
    if x1 == 0.0 || x2 == 0.0 {
        return 0.0;
    }
    (x1.powf(-theta) + x2.powf(-theta)).powf(-1.0 / theta)
}

/// Conditional inversion: `U2 = (U1^-theta (V^(-theta/(1+theta)) - 1) + 1)^(-1/theta)`.
/// Emits copula-scale values.
pub(super) fn sample<R: Rng + ?Sized>(theta: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let u1: f64 = open01(rng);
        let v: f64 = open01(rng);
        let u2 = (u1.powf(-theta) * (v.powf(-theta / (1.0 + theta)) - 1.0) + 1.0).powf(-1.0 / theta);
        out.push(u1);
        out.push(u2);
    }
    out
}

fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

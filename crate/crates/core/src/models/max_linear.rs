//! Max-linear model `X_j = max_t A_jt Z_t` with i.i.d. unit Fréchet factors.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::Result;
use crate::models::ModelSpec;
use crate::ranks::DataMatrix;
use crate::rng::RngStream;

/// `sum_t max_j A_jt x_j`.
pub(super) fn stdf(a: &[Vec<f64>], x: &[f64]) -> f64 {
    let r = a[0].len();
    (0..r)
        .map(|t| a.iter().zip(x).map(|(row, &xj)| row[t] * xj).fold(0.0, f64::max))
        .sum()
}

/// Returns the `n x d` observations and the `n x r` latent factors, row-major.
pub(super) fn sample<R: Rng + ?Sized>(a: &[Vec<f64>], n: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let d = a.len();
    let r = a[0].len();
    let mut x = Vec::with_capacity(n * d);
    let mut z = Vec::with_capacity(n * r);
    for _ in 0..n {
        let base = z.len();
        for _ in 0..r {
            let e: f64 = Exp1.sample(rng);
            z.push(1.0 / e);
        }
        let zi = &z[base..];
        for row in a {
            x.push(row.iter().zip(zi).map(|(c, f)| c * f).fold(0.0, f64::max));
        }
    }
    (x, z)
}

/// Max-linear sample together with its latent Fréchet factors.
pub fn sample_max_linear_with_factors(
    coefficients: &[Vec<f64>],
    n: usize,
    stream: RngStream,
) -> Result<(DataMatrix, Vec<f64>)> {
    let spec = ModelSpec::MaxLinear { coefficients: coefficients.to_vec() };
    spec.validate()?;
    let (x, z) = sample(coefficients, n, &mut stream.rng());
    Ok((DataMatrix::new(n, coefficients.len(), x)?, z))
}

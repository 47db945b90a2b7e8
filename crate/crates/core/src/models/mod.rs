//! Data-generating models and their true dependence functions.
//!
//! | model          | d   | sampler                           | emitted margins   |
//! |----------------|-----|-----------------------------------|-------------------|
//! | logistic       | 2   | positive-stable frailty (Gumbel)  | standard Gumbel   |
//! | max-linear     | any | max of weighted Fréchet factors   | unit Fréchet      |
//! | Brown–Resnick  | any | exact extremal functions          | unit Fréchet      |
//! | Clayton        | 2   | conditional inversion             | uniform           |
//!
//! All estimators are rank-based, so the choice of margins is immaterial.

mod brown_resnick;
mod clayton;
mod logistic;
mod max_linear;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::standard_normal_cdf;
use crate::ranks::DataMatrix;
use crate::rng::RngStream;

pub use brown_resnick::{br_stdf_oracle, BrownResnickField, OracleEstimate, SpectralPool};
pub use max_linear::sample_max_linear_with_factors;

/// Tagged description of a data-generating model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Bivariate logistic, `l(x) = (x1^(1/theta) + x2^(1/theta))^theta`, `theta in (0, 1]`.
    Logistic { theta: f64 },
    /// Max-linear with a `d x r` nonnegative coefficient matrix whose rows sum to one.
    MaxLinear { coefficients: Vec<Vec<f64>> },
    /// Brown–Resnick process observed at planar sites, semivariogram `(|h| / rho)^alpha`.
    BrownResnick { sites: Vec<[f64; 2]>, rho: f64, alpha: f64 },
    /// Bivariate Clayton copula; its "true" function is the lower tail copula.
    Clayton { theta: f64 },
}

impl ModelSpec {
    pub fn logistic(theta: f64) -> Result<Self> {
        let m = ModelSpec::Logistic { theta };
        m.validate()?;
        Ok(m)
    }

    /// Two-factor max-linear model with rows `(theta_j, 1 - theta_j)`.
    pub fn max_linear_two_factor(theta: &[f64]) -> Result<Self> {
        let m = ModelSpec::MaxLinear {
            coefficients: theta.iter().map(|&t| vec![t, 1.0 - t]).collect(),
        };
        m.validate()?;
        Ok(m)
    }

    /// The 2 x 2 unit-distance grid `(0,0), (1,0), (0,1), (1,1)`.
    pub fn brown_resnick_grid(rho: f64, alpha: f64) -> Result<Self> {
        let m = ModelSpec::BrownResnick {
            sites: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
            rho,
            alpha,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        let m = ModelSpec::Clayton { theta };
        m.validate()?;
        Ok(m)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Logistic { .. } => "logistic",
            ModelSpec::MaxLinear { .. } => "max_linear",
            ModelSpec::BrownResnick { .. } => "brown_resnick",
            ModelSpec::Clayton { .. } => "clayton",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Logistic { theta } => {
                if !(*theta > 0.0 && *theta <= 1.0) {
                    return Err(domain(format!("logistic theta must lie in (0, 1], got {theta}")));
                }
            }
            ModelSpec::MaxLinear { coefficients } => {
                let r = coefficients.first().map_or(0, Vec::len);
                if coefficients.is_empty() || r == 0 {
                    return Err(domain("max-linear coefficient matrix is empty"));
                }
                for row in coefficients {
                    if row.len() != r {
                        return Err(Error::DimensionMismatch { expected: r, got: row.len() });
                    }
                    if row.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
                        return Err(domain("max-linear coefficients must be finite and nonnegative"));
                    }
                    let s: f64 = row.iter().sum();
                    if (s - 1.0).abs() > 1e-9 {
                        return Err(domain(format!("max-linear rows must sum to 1, got {s}")));
                    }
                }
            }
            ModelSpec::BrownResnick { sites, rho, alpha } => {
                if sites.is_empty() {
                    return Err(domain("Brown–Resnick model needs at least one site"));
                }
                if !(*rho > 0.0 && rho.is_finite()) {
                    return Err(domain(format!("rho must be positive, got {rho}")));
                }
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return Err(domain(format!("alpha must lie in (0, 2], got {alpha}")));
                }
            }
            ModelSpec::Clayton { theta } => {
                if !(*theta > 0.0 && theta.is_finite()) {
                    return Err(domain(format!("Clayton theta must be positive, got {theta}")));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Logistic { .. } | ModelSpec::Clayton { .. } => 2,
            ModelSpec::MaxLinear { coefficients } => coefficients.len(),
            ModelSpec::BrownResnick { sites, .. } => sites.len(),
        }
    }

    /// Whether [`true_stdf`] returns an stdf (as opposed to a lower tail copula).
    pub fn is_stdf(&self) -> bool {
        !matches!(self, ModelSpec::Clayton { .. })
    }

    /// Model parameters in fitting order: `[theta]` for logistic, `[alpha, rho]`
    /// for Brown–Resnick.
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            ModelSpec::Logistic { theta } | ModelSpec::Clayton { theta } => vec![*theta],
            ModelSpec::MaxLinear { coefficients } => coefficients.iter().map(|r| r[0]).collect(),
            ModelSpec::BrownResnick { rho, alpha, .. } => vec![*alpha, *rho],
        }
    }
}

/// Semivariogram `gamma(h) = (|h| / rho)^alpha`.
pub fn semivariogram(h: [f64; 2], rho: f64, alpha: f64) -> f64 {
    (h[0].hypot(h[1]) / rho).powf(alpha)
}

/// The model's true stdf at `x` (the lower tail copula for Clayton).
///
/// Brown–Resnick has a closed form only when at most two coordinates are
/// nonzero; other points need [`br_stdf_oracle`].
pub fn true_stdf(m: &ModelSpec, x: &[f64]) -> Result<f64> {
    m.validate()?;
    if x.len() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: x.len() });
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(domain(format!("x must be finite and nonnegative, got {v}")));
    }
    match m {
        ModelSpec::Logistic { theta } => Ok(logistic::stdf(*theta, x[0], x[1])),
        ModelSpec::MaxLinear { coefficients } => Ok(max_linear::stdf(coefficients, x)),
        ModelSpec::BrownResnick { sites, rho, alpha } => {
            let nz: Vec<usize> = (0..x.len()).filter(|&j| x[j] > 0.0).collect();
            match nz.as_slice() {
                [] => Ok(0.0),
                [j] => Ok(x[*j]),
                [i, j] => {
                    let h = [sites[*i][0] - sites[*j][0], sites[*i][1] - sites[*j][1]];
                    hr_pairwise_stdf(semivariogram(h, *rho, *alpha), x[*i], x[*j])
                }
                _ => Err(Error::OracleUnavailable(
                    "Brown–Resnick stdf with more than two nonzero coordinates needs the Monte Carlo oracle".into(),
                )),
            }
        }
        ModelSpec::Clayton { theta } => Ok(clayton::lower_tail_copula(*theta, x[0], x[1])),
    }
}

/// Hüsler–Reiss bivariate stdf for a pair whose log-increment has variance
/// `2 gamma`: `x1 Phi(a/2 + ln(x1/x2)/a) + x2 Phi(a/2 + ln(x2/x1)/a)`, `a = sqrt(2 gamma)`.
pub fn hr_pairwise_stdf(gamma: f64, x1: f64, x2: f64) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(domain(format!("gamma must be nonnegative, got {gamma}")));
    }
    if !(x1 > 0.0 && x2 > 0.0) {
        return Err(domain(format!("Hüsler–Reiss arguments must be positive, got ({x1}, {x2})")));
    }
    if gamma == 0.0 {
        return Ok(x1.max(x2));
    }
    let a = (2.0 * gamma).sqrt();
    let lr = (x1 / x2).ln();
    Ok(x1 * standard_normal_cdf(a / 2.0 + lr / a) + x2 * standard_normal_cdf(a / 2.0 - lr / a))
}

/// Draws `n` i.i.d. rows from the model using only `stream`.
pub fn sample(m: &ModelSpec, n: usize, stream: RngStream) -> Result<DataMatrix> {
    sample_with(m, n, &mut stream.rng())
}

/// As [`sample`], drawing from an existing generator.
pub fn sample_with<R: Rng + ?Sized>(m: &ModelSpec, n: usize, rng: &mut R) -> Result<DataMatrix> {
    m.validate()?;
    if n < 2 {
        return Err(domain(format!("sample size must be at least 2, got {n}")));
    }
    let values = match m {
        ModelSpec::Logistic { theta } => logistic::sample(*theta, n, rng),
        ModelSpec::MaxLinear { coefficients } => max_linear::sample(coefficients, n, rng).0,
        ModelSpec::BrownResnick { .. } => BrownResnickField::new(m)?.sample(n, rng),
        ModelSpec::Clayton { theta } => clayton::sample(*theta, n, rng),
    };
    DataMatrix::new(n, m.dim(), values)
}

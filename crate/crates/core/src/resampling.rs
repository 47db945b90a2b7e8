//! Bootstrap engines for the lower tail copula.
//!
//! - The beta resampler draws genuine samples from the empirical beta copula
//!   and re-ranks them.
//! - The direct multiplier bootstrap reweights observations with i.i.d.
//!   mean-one, variance-one multipliers.
//!
//! Both act on a [`RankMatrix`]: every statistic involved is rank based, so
//! raw data should be ranked first with [`crate::ranks::compute_ranks`].

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::{empirical_copula, PreparedBetaTailCopula};
use crate::ranks::{rank_values, RankMatrix};
use crate::rng::RngStream;
use crate::stats::sample_covariance;

/// How many consecutive degenerate draws are tolerated before giving up.
const MAX_REDRAWS: usize = 1_000;

/// Discrete law of the multipliers `xi_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierLaw {
    support: Vec<f64>,
    probabilities: Vec<f64>,
}

impl Default for MultiplierLaw {
    /// `P[xi = 0] = P[xi = 2] = 1/2`.
    fn default() -> Self {
        Self { support: vec![0.0, 2.0], probabilities: vec![0.5, 0.5] }
    }
}

impl MultiplierLaw {
    /// Nonnegative support, probabilities summing to one, mean one and
    /// variance one (to `1e-12`).
    pub fn new(support: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        let law = Self { support, probabilities };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() || self.support.len() != self.probabilities.len() {
            return Err(Error::InvalidConfig("multiplier support and probabilities must be nonempty and of equal length".into()));
        }
        if self.support.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("multipliers must be finite and nonnegative".into()));
        }
        if self.probabilities.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidConfig("probabilities must be nonnegative".into()));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("probabilities sum to {total}")));
        }
        let (mean, var) = (self.mean(), self.variance());
        if (mean - 1.0).abs() > 1e-12 || (var - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("multipliers need mean 1 and variance 1, got {mean} and {var}")));
        }
        Ok(())
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.probabilities).map(|(s, p)| s * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.support.iter().zip(&self.probabilities).map(|(s, p)| p * (s - m) * (s - m)).sum()
    }

    fn sampler(&self) -> Result<WeightedIndex<f64>> {
        WeightedIndex::new(&self.probabilities).map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// One draw from the empirical beta copula: a uniform row `I`, then
/// independent `V_j ~ Beta(R_Ij, n - R_Ij + 1)`.
pub fn draw_beta_copula_observation<R: Rng + ?Sized>(r: &RankMatrix, rng: &mut R) -> Vec<f64> {
    let n = r.n();
    let i = rng.random_range(0..n);
    r.row(i)
        .iter()
        .map(|&rk| {
            let a = rk as f64;
            Beta::new(a, n as f64 - a + 1.0).expect("valid beta parameters").sample(rng)
        })
        .collect()
}

/// `n` draws from the empirical beta copula, ranked columnwise. An exact
/// floating point tie (probability zero) triggers a fresh draw.
pub fn beta_bootstrap_ranks<R: Rng + ?Sized>(r: &RankMatrix, rng: &mut R) -> Result<RankMatrix> {
    let (n, d) = (r.n(), r.d());
    // Beta laws depend only on the rank, so build them once per rank value.
    let laws: Vec<Beta<f64>> = (1..=n)
        .map(|rk| Beta::new(rk as f64, (n - rk + 1) as f64).expect("valid beta parameters"))
        .collect();
    let mut values = vec![0.0; n * d];
    for _ in 0..MAX_REDRAWS {
        for row in values.chunks_exact_mut(d) {
            let i = rng.random_range(0..n);
            for (v, &rk) in row.iter_mut().zip(r.row(i)) {
                *v = laws[rk as usize - 1].sample(rng);
            }
        }
        match rank_values(n, d, &values) {
            Ok(ranks) => return Ok(ranks),
            Err(Error::TiesDetected { .. }) => log::debug!("tie in beta resample, redrawing"),
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleDegenerate("repeated ties in beta resample".into()))
}

/// Rank-indexed cumulative weights of one margin, normalised to end at one.
fn weighted_margin(r: &RankMatrix, j: usize, xi: &[f64], total: f64) -> Vec<f64> {
    let n = r.n();
    let mut by_rank = vec![0.0; n];
    for (i, &w) in xi.iter().enumerate() {
        by_rank[r.get(i, j) as usize - 1] = w;
    }
    let mut acc = 0.0;
    by_rank
        .iter()
        .map(|w| {
            acc += w;
            acc / total
        })
        .collect()
}

/// Generalised inverse of a rank-indexed step CDF: the smallest rank whose
/// cumulative weight reaches `p`, or 0 (nothing at or below) when `p == 0`.
fn generalized_inverse(cum: &[f64], p: f64) -> usize {
    if p <= 0.0 {
        return 0;
    }
    let target = p * (1.0 - 1e-12);
    let idx = cum.partition_point(|&c| c < target);
    (idx + 1).min(cum.len())
}

/// Lower tail copula under fixed multipliers `xi`:
/// `(n/k) F_n^xi(F_1^{xi-}((k/n) x_1), F_2^{xi-}((k/n) x_2))`.
pub fn multiplier_tail_copula_with_weights(r: &RankMatrix, k: f64, x: &[f64], xi: &[f64]) -> Result<f64> {
    Ok(multiplier_points(r, k, std::slice::from_ref(&x.to_vec()), xi)?[0])
}

fn multiplier_points(r: &RankMatrix, k: f64, points: &[Vec<f64>], xi: &[f64]) -> Result<Vec<f64>> {
    let n = r.n();
    if r.d() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: r.d() });
    }
    if xi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: xi.len() });
    }
    if !(k > 0.0 && k <= n as f64) {
        return Err(domain(format!("k must lie in (0, n = {n}], got {k}")));
    }
    let total: f64 = xi.iter().sum();
    if total <= 0.0 {
        return Err(Error::ResampleDegenerate("all multipliers are zero".into()));
    }
    let cums = [weighted_margin(r, 0, xi, total), weighted_margin(r, 1, xi, total)];
    let scale = n as f64 / k;
    points
        .iter()
        .map(|x| {
            if x.len() != 2 {
                return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
            }
            if x.iter().any(|v| !(*v >= 0.0) || k * v / n as f64 > 1.0 + 1e-12) {
                return Err(domain(format!("point {x:?} outside [0, n/k]^2")));
            }
            let t0 = generalized_inverse(&cums[0], k * x[0] / n as f64) as u32;
            let t1 = generalized_inverse(&cums[1], k * x[1] / n as f64) as u32;
            let mass: f64 = r
                .rows()
                .zip(xi)
                .filter(|(row, _)| row[0] <= t0 && row[1] <= t1)
                .map(|(_, w)| w)
                .sum();
            Ok(scale * mass / total)
        })
        .collect()
}

/// Direct multiplier lower tail copula with fresh multipliers from `law`.
/// An all-zero draw yields [`Error::ResampleDegenerate`]; callers redraw.
pub fn multiplier_tail_copula<R: Rng + ?Sized>(
    r: &RankMatrix,
    k: f64,
    x: &[f64],
    law: &MultiplierLaw,
    rng: &mut R,
) -> Result<f64> {
    let xi = draw_multipliers(r.n(), law, rng)?;
    multiplier_tail_copula_with_weights(r, k, x, &xi)
}

fn draw_multipliers<R: Rng + ?Sized>(n: usize, law: &MultiplierLaw, rng: &mut R) -> Result<Vec<f64>> {
    let idx = law.sampler()?;
    Ok((0..n).map(|_| law.support[idx.sample(rng)]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapMethod {
    Beta,
    Multiplier,
}

impl BootstrapMethod {
    pub fn label(&self) -> &'static str {
        match self {
            BootstrapMethod::Beta => "beta",
            BootstrapMethod::Multiplier => "multiplier",
        }
    }
}

/// Settings of a bootstrap covariance run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub method: BootstrapMethod,
    pub k: f64,
    pub points: Vec<Vec<f64>>,
    /// Point labels; `x1`, `x2`, ... when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub replications: usize,
    #[serde(default)]
    pub law: MultiplierLaw,
}

impl BootstrapConfig {
    pub fn new(method: BootstrapMethod, k: f64, points: Vec<Vec<f64>>, replications: usize) -> Self {
        Self { method, k, points, labels: None, replications, law: MultiplierLaw::default() }
    }

    /// The points `(cos(m pi/8), sin(m pi/8))`, `m = 1, 2, 3`, labelled `pi/8`, `2pi/8`, `3pi/8`.
    pub fn unit_circle_points() -> (Vec<Vec<f64>>, Vec<String>) {
        let pts = (1..=3)
            .map(|m| {
                let a = m as f64 * std::f64::consts::PI / 8.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let labels = vec!["pi/8".to_string(), "2pi/8".to_string(), "3pi/8".to_string()];
        (pts, labels)
    }

    pub fn labels(&self) -> Vec<String> {
        self.labels
            .clone()
            .unwrap_or_else(|| (1..=self.points.len()).map(|m| format!("x{m}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 replications, got {}", self.replications)));
        }
        if self.points.is_empty() {
            return Err(Error::InvalidConfig("no evaluation points".into()));
        }
        if let Some(l) = &self.labels {
            if l.len() != self.points.len() {
                return Err(Error::DimensionMismatch { expected: self.points.len(), got: l.len() });
            }
        }
        self.law.validate()
    }
}

/// Sample covariance of bootstrap statistics at labelled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceEstimate {
    pub method: BootstrapMethod,
    pub labels: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub matrix: Vec<Vec<f64>>,
    pub replications: usize,
}

/// Replicate statistics as a row-major `B x q` matrix:
/// `sqrt(k) (Lambda* - Lambda)` with the method's own centering.
pub fn bootstrap_replicates(r: &RankMatrix, cfg: &BootstrapConfig, stream: RngStream) -> Result<Vec<f64>> {
    cfg.validate()?;
    let sk = cfg.k.sqrt();
    let q = cfg.points.len();
    let rows: Vec<Vec<f64>> = match cfg.method {
        BootstrapMethod::Beta => {
            let prepared = PreparedBetaTailCopula::new(r.n(), cfg.k, &cfg.points)?;
            let center = prepared.evaluate(r)?;
            (0..cfg.replications as u64)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream.substream(b).rng();
                    let star = beta_bootstrap_ranks(r, &mut rng)?;
                    let v = prepared.evaluate(&star)?;
                    Ok(v.iter().zip(&center).map(|(a, c)| sk * (a - c)).collect())
                })
                .collect::<Result<_>>()?
        }
        BootstrapMethod::Multiplier => {
            let n = r.n() as f64;
            let center: Vec<f64> = cfg
                .points
                .iter()
                .map(|x| {
                    let u: Vec<f64> = x.iter().map(|v| (cfg.k * v / n).min(1.0)).collect();
                    Ok(n / cfg.k * empirical_copula(r, &u)?)
                })
                .collect::<Result<_>>()?;
            (0..cfg.replications as u64)
                .into_par_iter()
                .map(|b| {
                    let mut rng = stream.substream(b).rng();
                    for _ in 0..MAX_REDRAWS {
                        let xi = draw_multipliers(r.n(), &cfg.law, &mut rng)?;
                        match multiplier_points(r, cfg.k, &cfg.points, &xi) {
                            Ok(v) => return Ok(v.iter().zip(&center).map(|(a, c)| sk * (a - c)).collect()),
                            Err(Error::ResampleDegenerate(_)) => log::info!("all-zero multipliers in replicate {b}, redrawing"),
                            Err(e) => return Err(e),
                        }
                    }
                    Err(Error::ResampleDegenerate(format!("replicate {b}: {MAX_REDRAWS} degenerate multiplier draws")))
                })
                .collect::<Result<_>>()?
        }
    };
    debug_assert!(rows.iter().all(|v: &Vec<f64>| v.len() == q));
    Ok(rows.concat())
}

/// Bootstrap covariance matrix of the tail copula process at `cfg.points`.
pub fn bootstrap_covariance(r: &RankMatrix, cfg: &BootstrapConfig, stream: RngStream) -> Result<CovarianceEstimate> {
    let reps = bootstrap_replicates(r, cfg, stream)?;
    let q = cfg.points.len();
    let flat = sample_covariance(&reps, cfg.replications, q);
    Ok(CovarianceEstimate {
        method: cfg.method,
        labels: cfg.labels(),
        points: cfg.points.clone(),
        matrix: flat.chunks_exact(q).map(|c| c.to_vec()).collect(),
        replications: cfg.replications,
    })
}

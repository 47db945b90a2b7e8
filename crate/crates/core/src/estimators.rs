//! Rank-based estimators of copulas, tail copulas and the stable tail
//! dependence function (stdf).
//!
//! The beta-smoothed estimators never build `n x n` tables: for a fixed
//! evaluation point the order-statistic CDFs `F_{n,r}(u_j)` for all ranks `r`
//! come from a single binomial upper-tail vector
//! ([`binomial_upper_tails`]), after which every row costs `O(d)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::numerics::{binomial_pmf, binomial_upper_tails};
use crate::ranks::RankMatrix;

/// Tuning parameter `k` and the rank-threshold offset of the empirical stdf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdfConfig {
    pub k: f64,
    #[serde(default = "default_offset")]
    pub offset: f64,
}

fn default_offset() -> f64 {
    0.5
}

impl StdfConfig {
    /// `offset` must be one of `0`, `0.5` or `1`.
    pub fn new(k: f64, offset: f64) -> Result<Self> {
        let cfg = Self { k, offset };
        cfg.validate_offset()?;
        if !(k > 0.0 && k.is_finite()) {
            return Err(domain(format!("k must be positive, got {k}")));
        }
        Ok(cfg)
    }

    /// Default offset 0.5 (`n + 0.5 - k x_j` thresholds).
    pub fn with_k(k: f64) -> Result<Self> {
        Self::new(k, default_offset())
    }

    fn validate_offset(&self) -> Result<()> {
        if ![0.0, 0.5, 1.0].contains(&self.offset) {
            return Err(domain(format!("offset must be 0, 0.5 or 1, got {}", self.offset)));
        }
        Ok(())
    }

    fn validate_for(&self, n: usize) -> Result<()> {
        self.validate_offset()?;
        if !(self.k > 0.0 && self.k <= n as f64) {
            return Err(domain(format!("k must lie in (0, n = {n}], got {}", self.k)));
        }
        Ok(())
    }
}

/// Which stdf estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdfEstimator {
    Empirical,
    Beta,
}

impl StdfEstimator {
    pub fn label(&self) -> &'static str {
        match self {
            StdfEstimator::Empirical => "empirical",
            StdfEstimator::Beta => "beta",
        }
    }

    pub fn evaluate(&self, r: &RankMatrix, cfg: &StdfConfig, x: &[f64]) -> Result<f64> {
        match self {
            StdfEstimator::Empirical => empirical_stdf(r, cfg, x),
            StdfEstimator::Beta => empirical_beta_stdf(r, cfg, x),
        }
    }
}

/// Flavor of tail copula estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailFlavor {
    Empirical,
    Beta,
}

/// Evaluation points in `[0, M]^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    points: Vec<Vec<f64>>,
    bound: f64,
}

impl EvalGrid {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(domain("evaluation grid is empty"));
        }
        let mut bound: f64 = 0.0;
        for p in &points {
            if p.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.len() });
            }
            for &v in p {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(domain(format!("grid coordinates must be finite and nonnegative, got {v}")));
                }
                bound = bound.max(v);
            }
        }
        Ok(Self { points, bound })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Smallest `M` with every point in `[0, M]^d`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Checks `(k/n) x_j <= 1` for every coordinate of every point.
    pub fn check(&self, n: usize, k: f64) -> Result<()> {
        check_scaled(n, k, &vec![self.bound; self.dim()])
    }
}

fn check_dim(r: &RankMatrix, len: usize) -> Result<()> {
    if r.d() != len {
        return Err(Error::DimensionMismatch { expected: r.d(), got: len });
    }
    Ok(())
}

fn check_unit(u: &[f64]) -> Result<()> {
    match u.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(v) => Err(domain(format!("copula argument {v} outside [0, 1]"))),
        None => Ok(()),
    }
}

// Tolerates rounding in k x / n for points sitting exactly on n/k.
fn check_scaled(n: usize, k: f64, x: &[f64]) -> Result<()> {
    for &v in x {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(domain(format!("x must be finite and nonnegative, got {v}")));
        }
        if k * v / n as f64 > 1.0 + 1e-12 {
            return Err(domain(format!("(k/n) x_j = {} exceeds 1", k * v / n as f64)));
        }
    }
    Ok(())
}

/// `C_n(u) = (1/n) sum_i prod_j 1{R_ij / n <= u_j}`.
pub fn empirical_copula(r: &RankMatrix, u: &[f64]) -> Result<f64> {
    check_dim(r, u.len())?;
    check_unit(u)?;
    let n = r.n() as f64;
    let count = r
        .rows()
        .filter(|row| row.iter().zip(u).all(|(&rk, &uj)| rk as f64 / n <= uj))
        .count();
    Ok(count as f64 / n)
}

/// `C_n^beta(u) = (1/n) sum_i prod_j F_{n,R_ij}(u_j)`.
pub fn empirical_beta_copula(r: &RankMatrix, u: &[f64]) -> Result<f64> {
    check_dim(r, u.len())?;
    check_unit(u)?;
    let tables: Vec<Vec<f64>> = u.iter().map(|&uj| binomial_upper_tails(r.n(), uj)).collect();
    Ok(beta_copula_from_tables(r, &tables))
}

fn beta_copula_from_tables(r: &RankMatrix, cdf_tables: &[Vec<f64>]) -> f64 {
    let sum: f64 = r
        .rows()
        .map(|row| {
            row.iter()
                .zip(cdf_tables)
                .map(|(&rk, t)| t[rk as usize])
                .product::<f64>()
        })
        .sum();
    sum / r.n() as f64
}

/// `(1/k) #{i : R_ij > n + offset - k x_j for some j}`.
pub fn empirical_stdf(r: &RankMatrix, cfg: &StdfConfig, x: &[f64]) -> Result<f64> {
    check_dim(r, x.len())?;
    cfg.validate_for(r.n())?;
    check_scaled(r.n(), cfg.k, x)?;
    let n = r.n() as f64;
    let thresholds: Vec<f64> = x.iter().map(|&xj| n + cfg.offset - cfg.k * xj).collect();
    let count = r
        .rows()
        .filter(|row| row.iter().zip(&thresholds).any(|(&rk, &t)| rk as f64 > t))
        .count();
    Ok(count as f64 / cfg.k)
}

/// Survival tables `S_j[r] = 1 - F_{n,r}(1 - (k/n) x_j) = P[Bin(n, (k/n) x_j) >= n - r + 1]`,
/// indexed by rank `r` in `1..=n` (entry 0 unused).
pub(crate) fn beta_survival_tables(n: usize, k: f64, x: &[f64]) -> Vec<Vec<f64>> {
    x.iter()
        .map(|&xj| {
            let p = (k * xj / n as f64).min(1.0);
            let g = binomial_upper_tails(n, p);
            let mut s = vec![0.0; n + 1];
            for (rank, slot) in s.iter_mut().enumerate().skip(1) {
                *slot = g[n - rank + 1];
            }
            s
        })
        .collect()
}

/// `(n/k) (1 - C_n^beta(1 - k x / n))`, accumulated through survival
/// probabilities so small values keep full relative precision.
pub(crate) fn beta_stdf_from_tables(r: &RankMatrix, k: f64, survival: &[Vec<f64>]) -> f64 {
    let sum: f64 = r
        .rows()
        .map(|row| {
            row.iter().zip(survival).fold(0.0, |acc, (&rk, s)| {
                let sj = s[rk as usize];
                acc + sj - acc * sj
            })
        })
        .sum();
    sum / k
}

/// Empirical beta stdf `(n/k) {1 - C_n^beta(1 - (k/n) x)}`. The offset of
/// `cfg` is ignored.
pub fn empirical_beta_stdf(r: &RankMatrix, cfg: &StdfConfig, x: &[f64]) -> Result<f64> {
    check_dim(r, x.len())?;
    cfg.validate_for(r.n())?;
    check_scaled(r.n(), cfg.k, x)?;
    let tables = beta_survival_tables(r.n(), cfg.k, x);
    Ok(beta_stdf_from_tables(r, cfg.k, &tables))
}

/// Exact binomial-mixture form of the empirical beta stdf:
/// `E_T[l_{n,k}(T / k)]` with independent `T_j ~ Bin(n, (k/n) x_j)`,
/// summed over the whole `{0..n}^d` support. Guarded to `n <= 30`, `d <= 3`.
pub fn beta_stdf_mixture_oracle(r: &RankMatrix, k: f64, x: &[f64]) -> Result<f64> {
    check_dim(r, x.len())?;
    let (n, d) = (r.n(), r.d());
    if n > 30 || d > 3 {
        return Err(Error::SizeGuard(format!(
            "mixture enumeration limited to n <= 30 and d <= 3, got n = {n}, d = {d}"
        )));
    }
    StdfConfig { k, offset: 0.0 }.validate_for(n)?;
    check_scaled(n, k, x)?;

    let pmfs: Vec<Vec<f64>> = x
        .iter()
        .map(|&xj| {
            let p = (k * xj / n as f64).min(1.0);
            (0..=n as u64).map(|s| binomial_pmf(n as u64, p, s)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut t = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let weight: f64 = t.iter().zip(&pmfs).map(|(&tj, p)| p[tj]).product();
        if weight > 0.0 {
            // l_{n,k}(t / k) with offset 0: some R_ij > n - t_j.
            let count = r
                .rows()
                .filter(|row| row.iter().zip(&t).any(|(&rk, &tj)| rk as usize + tj > n))
                .count();
            total += weight * count as f64 / k;
        }
        let mut j = 0;
        loop {
            if j == d {
                return Ok(total);
            }
            t[j] += 1;
            if t[j] <= n {
                break;
            }
            t[j] = 0;
            j += 1;
        }
    }
}

/// Lower tail copula estimators `(n/k) C((k/n) x)` in dimension two.
pub fn lower_tail_copula(r: &RankMatrix, cfg: &StdfConfig, x: &[f64], flavor: TailFlavor) -> Result<f64> {
    if r.d() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: r.d() });
    }
    check_dim(r, x.len())?;
    cfg.validate_for(r.n())?;
    check_scaled(r.n(), cfg.k, x)?;
    let n = r.n() as f64;
    let u: Vec<f64> = x.iter().map(|&xj| (cfg.k * xj / n).min(1.0)).collect();
    let c = match flavor {
        TailFlavor::Empirical => empirical_copula(r, &u)?,
        TailFlavor::Beta => empirical_beta_copula(r, &u)?,
    };
    Ok(n / cfg.k * c)
}

/// Empirical upper tail copula `(1/k) #{i : R_i1 > n + offset - k x_1 and R_i2 > n + offset - k x_2}`.
pub fn upper_tail_copula(r: &RankMatrix, cfg: &StdfConfig, x: &[f64]) -> Result<f64> {
    if r.d() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: r.d() });
    }
    check_dim(r, x.len())?;
    cfg.validate_for(r.n())?;
    check_scaled(r.n(), cfg.k, x)?;
    let n = r.n() as f64;
    let t: Vec<f64> = x.iter().map(|&xj| n + cfg.offset - cfg.k * xj).collect();
    let count = r
        .rows()
        .filter(|row| row[0] as f64 > t[0] && row[1] as f64 > t[1])
        .count();
    Ok(count as f64 / cfg.k)
}

/// Evaluates an stdf estimator on every grid point, in parallel over points.
pub fn evaluate_grid(
    r: &RankMatrix,
    cfg: &StdfConfig,
    estimator: StdfEstimator,
    grid: &EvalGrid,
) -> Result<Vec<f64>> {
    check_dim(r, grid.dim())?;
    grid.check(r.n(), cfg.k)?;
    grid.points()
        .par_iter()
        .map(|x| estimator.evaluate(r, cfg, x))
        .collect()
}

/// Beta lower tail copula at fixed points, with the order-statistic CDF tables
/// built once and shared by every rank matrix of size `n`.
#[derive(Debug, Clone)]
pub struct PreparedBetaTailCopula {
    n: usize,
    k: f64,
    tables: Vec<Vec<Vec<f64>>>,
}

impl PreparedBetaTailCopula {
    pub fn new(n: usize, k: f64, points: &[Vec<f64>]) -> Result<Self> {
        StdfConfig { k, offset: 0.0 }.validate_for(n)?;
        let tables = points
            .iter()
            .map(|x| {
                if x.len() != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: x.len() });
                }
                check_scaled(n, k, x)?;
                Ok(x.iter()
                    .map(|&xj| binomial_upper_tails(n, (k * xj / n as f64).min(1.0)))
                    .collect())
            })
            .collect::<Result<_>>()?;
        Ok(Self { n, k, tables })
    }

    /// `(n/k) C_n^beta((k/n) x_m)` for every prepared point `x_m`.
    pub fn evaluate(&self, r: &RankMatrix) -> Result<Vec<f64>> {
        if r.n() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: r.n() });
        }
        check_dim(r, 2)?;
        let scale = self.n as f64 / self.k;
        Ok(self
            .tables
            .iter()
            .map(|t| scale * beta_copula_from_tables(r, t))
            .collect())
    }
}

//! Special functions used by the rank-based estimators.
//!
//! Binomial probabilities follow Loader's saddle-point formulation (Stirling
//! error terms plus the deviance `bd0`), which keeps relative accuracy near
//! machine precision for large `n`. The order-statistic CDF
//! `F_{n,r}(u) = P[Beta(r, n-r+1) <= u] = P[Bin(n, u) >= r]` is the regularized
//! incomplete beta function, evaluated by a Lentz continued fraction whose
//! prefactor is exactly a binomial probability.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Sample size and rank of a uniform order statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderStatParams {
    n: u64,
    r: u64,
}

impl OrderStatParams {
    pub fn new(n: u64, r: u64) -> Result<Self> {
        if n == 0 || r == 0 || r > n {
            return Err(domain(format!("order statistic needs 1 <= r <= n, got n={n}, r={r}")));
        }
        Ok(Self { n, r })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn r(&self) -> u64 {
        self.r
    }
}

/// `F_{n,r}(u)`, the CDF of the `r`-th order statistic of `n` uniforms,
/// i.e. of `Beta(r, n - r + 1)`.
pub fn beta_order_statistic_cdf(p: OrderStatParams, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(domain(format!("u must lie in [0, 1], got {u}")));
    }
    Ok(order_stat_cdf_unchecked(p.n, p.r, u))
}

fn order_stat_cdf_unchecked(n: u64, r: u64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let nf = n as f64;
    let a = r as f64;
    let b = (n - r + 1) as f64;
    if u < (a + 1.0) / (a + b + 2.0) {
        let front = dbinom_raw(a, nf, u, 1.0 - u) * (1.0 - u);
        (front * beta_continued_fraction(a, b, u)).min(1.0)
    } else {
        let front = dbinom_raw(a - 1.0, nf, u, 1.0 - u) * u;
        (1.0 - front * beta_continued_fraction(b, a, 1.0 - u)).max(0.0)
    }
}

/// `C(n, s) p^s (1 - p)^(n - s)`.
pub fn binomial_pmf(n: u64, p: f64, s: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("probability must lie in [0, 1], got {p}")));
    }
    if s > n {
        return Err(domain(format!("binomial outcome {s} exceeds n = {n}")));
    }
    Ok(dbinom_raw(s as f64, n as f64, p, 1.0 - p))
}

/// Standard normal CDF via the complementary error function.
pub fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Upper tail probabilities `G[m] = P[Bin(n, p) >= m]` for `m = 0..=n+1`.
///
/// `G[r] = F_{n,r}(p)` for `r` in `1..=n`, so one call gives the beta CDF at a
/// fixed point for every rank. The pmf is seeded at the mode and propagated by
/// the ratio recurrence in both directions; tails are summed from the smallest
/// terms up. `O(n)`.
pub fn binomial_upper_tails(n: usize, p: f64) -> Vec<f64> {
    let mut g = vec![0.0; n + 2];
    if p <= 0.0 {
        g[0] = 1.0;
        return g;
    }
    if p >= 1.0 {
        g[..=n].fill(1.0);
        return g;
    }
    let pmf = binomial_pmf_all(n, p);
    for m in (0..=n).rev() {
        g[m] = g[m + 1] + pmf[m];
    }
    g[0] = 1.0;
    g
}

/// Full pmf vector of `Bin(n, p)` for `0 < p < 1`.
pub(crate) fn binomial_pmf_all(n: usize, p: f64) -> Vec<f64> {
    let q = 1.0 - p;
    let nf = n as f64;
    let mode = (((n + 1) as f64 * p).floor() as usize).min(n);
    let mut pmf = vec![0.0; n + 1];
    pmf[mode] = dbinom_raw(mode as f64, nf, p, q);
    let up = p / q;
    for s in mode..n {
        let next = pmf[s] * ((n - s) as f64 / (s + 1) as f64) * up;
        if next == 0.0 {
            break;
        }
        pmf[s + 1] = next;
    }
    let down = q / p;
    for s in (1..=mode).rev() {
        let next = pmf[s] * (s as f64 / (n - s + 1) as f64) * down;
        if next == 0.0 {
            break;
        }
        pmf[s - 1] = next;
    }
    pmf
}

/// Loader's binomial density for integer-valued `x` and `n`, `q = 1 - p`.
fn dbinom_raw(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    if x == 0.0 {
        if n == 0.0 {
            return 1.0;
        }
        let lc = if p < 0.1 { -bd0(n, n * q) - n * p } else { n * q.ln() };
        return lc.exp();
    }
    if x == n {
        let lc = if q < 0.1 { -bd0(n, n * p) - n * q } else { n * p.ln() };
        return lc.exp();
    }
    if x < 0.0 || x > n {
        return 0.0;
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = LN_2PI + x.ln() + (-x / n).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)]` for integer `n >= 1`.
fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        let mut fact = 1.0;
        let mut i = 2.0;
        while i <= n {
            fact *= i;
            i += 1.0;
        }
        return fact.ln() - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        return (S0 - S1 / nn) / n;
    }
    if n > 80.0 {
        return (S0 - (S1 - S2 / nn) / nn) / n;
    }
    if n > 35.0 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Deviance term `x ln(x / np) + np - x`, with a series near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 100_000;
    const EPS: f64 = 1e-16;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

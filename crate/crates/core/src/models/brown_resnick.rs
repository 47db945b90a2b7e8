//! Brown–Resnick process at finitely many sites.
//!
//! The Gaussian field `eps` is pinned at the origin, `eps(0) = 0`, with
//! covariance `gamma(s) + gamma(t) - gamma(s - t)`. Spectral functions are
//! `W_j = exp(eps(s_j) - gamma(s_j))`, so `E[W_j] = 1`.
//!
//! Exact simulation uses extremal functions: for each site `j` in turn,
//! Poisson points `zeta` above the current maximum at `j` are combined with
//! spectral functions normalised at `s_j`,
//! `Y_i = exp(eps(s_i) - eps(s_j) - gamma(s_i - s_j))`, and a candidate is
//! kept only if it does not exceed the maximum at any earlier site.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{semivariogram, ModelSpec};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone)]
pub struct BrownResnickField {
    d: usize,
    chol: Vec<f64>,
    gamma_origin: Vec<f64>,
    gamma_pair: Vec<f64>,
}

impl BrownResnickField {
    pub fn new(m: &ModelSpec) -> Result<Self> {
        let ModelSpec::BrownResnick { sites, rho, alpha } = m else {
            return Err(Error::InvalidConfig(format!("expected a Brown–Resnick model, got {}", m.name())));
        };
        m.validate()?;
        let d = sites.len();
        for a in 0..d {
            for b in 0..a {
                if sites[a] == sites[b] {
                    return Err(Error::Cholesky(format!("duplicate site {:?}", sites[a])));
                }
            }
        }
        let gv = |h: [f64; 2]| semivariogram(h, *rho, *alpha);
        let gamma_origin: Vec<f64> = sites.iter().map(|&s| gv(s)).collect();
        let mut gamma_pair = vec![0.0; d * d];
        let mut cov = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                let h = [sites[a][0] - sites[b][0], sites[a][1] - sites[b][1]];
                gamma_pair[a * d + b] = gv(h);
                cov[a * d + b] = gamma_origin[a] + gamma_origin[b] - gamma_pair[a * d + b];
            }
        }
        let chol = semidefinite_cholesky(&cov, d)?;
        Ok(Self { d, chol, gamma_origin, gamma_pair })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// One draw of `eps` at the sites.
    pub fn draw_field<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        let d = self.d;
        for v in z.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        for a in 0..d {
            out[a] = (0..=a).map(|b| self.chol[a * d + b] * z[b]).sum();
        }
    }

    /// `n` i.i.d. observations with unit Fréchet margins, row-major.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let d = self.d;
        let mut out = Vec::with_capacity(n * d);
        let mut zmax = vec![0.0; d];
        let mut normals = vec![0.0; d];
        let mut field = vec![0.0; d];
        let mut y = vec![0.0; d];
        for _ in 0..n {
            zmax.fill(0.0);
            for j in 0..d {
                let mut e: f64 = Exp1.sample(rng);
                let mut zeta = 1.0 / e;
                while zeta > zmax[j] {
                    self.draw_field(rng, &mut normals, &mut field);
                    for i in 0..d {
                        y[i] = zeta * (field[i] - field[j] - self.gamma_pair[i * d + j]).exp();
                    }
                    if (0..j).all(|i| y[i] < zmax[i]) {
                        for i in 0..d {
                            zmax[i] = zmax[i].max(y[i]);
                        }
                    }
                    let de: f64 = Exp1.sample(rng);
                    e += de;
                    zeta = 1.0 / e;
                }
            }
            out.extend_from_slice(&zmax);
        }
        out
    }

    /// Spectral vector `W_j = exp(eps(s_j) - gamma(s_j))`.
    fn spectral<R: Rng + ?Sized>(&self, rng: &mut R, normals: &mut [f64], w: &mut [f64]) {
        self.draw_field(rng, normals, w);
        for (wj, g) in w.iter_mut().zip(&self.gamma_origin) {
            *wj = (*wj - g).exp();
        }
    }

    /// Stores `mc` spectral vectors so many points can share one set of draws.
    pub fn spectral_pool(&self, mc: usize, stream: RngStream) -> SpectralPool {
        let mut rng = stream.rng();
        let mut normals = vec![0.0; self.d];
        let mut w = vec![0.0; mc * self.d];
        for chunk in w.chunks_exact_mut(self.d) {
            self.spectral(&mut rng, &mut normals, chunk);
        }
        SpectralPool { d: self.d, w }
    }
}

/// A fixed set of Brown–Resnick spectral vectors.
#[derive(Debug, Clone)]
pub struct SpectralPool {
    d: usize,
    w: Vec<f64>,
}

impl SpectralPool {
    pub fn len(&self) -> usize {
        self.w.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// Monte Carlo mean of `max_j x_j W_j` over the pool.
    pub fn stdf(&self, x: &[f64]) -> Result<OracleEstimate> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        // Plain power sums: this loop dominates oracle precomputation. The
        // values are O(1) with moderate spread, so cancellation is harmless.
        let (mut s1, mut s2) = (0.0, 0.0);
        for w in self.w.chunks_exact(self.d) {
            let v = w.iter().zip(x).map(|(a, b)| a * b).fold(0.0, f64::max);
            s1 += v;
            s2 += v * v;
        }
        let m = self.len() as f64;
        let mean = s1 / m;
        let var = if m > 1.0 { ((s2 - s1 * mean) / (m - 1.0)).max(0.0) } else { 0.0 };
        Ok(OracleEstimate { estimate: mean, std_error: (var / m).sqrt() })
    }
}

#[derive(Default)]
struct MomentAccumulator {
    count: usize,
    mean: f64,
    m2: f64,
}

impl MomentAccumulator {
    fn push(&mut self, v: f64) {
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn finish(&self) -> OracleEstimate {
        let var = if self.count > 1 { self.m2 / (self.count - 1) as f64 } else { 0.0 };
        OracleEstimate { estimate: self.mean, std_error: (var / self.count as f64).sqrt() }
    }
}

/// Monte Carlo stdf `E[max_j x_j W_j]` of a Brown–Resnick model from `mc`
/// Gaussian field draws, with its standard error.
pub fn br_stdf_oracle(m: &ModelSpec, x: &[f64], mc: usize, stream: RngStream) -> Result<OracleEstimate> {
    let field = BrownResnickField::new(m)?;
    if x.len() != field.d {
        return Err(Error::DimensionMismatch { expected: field.d, got: x.len() });
    }
    if mc < 2 {
        return Err(Error::InvalidConfig(format!("oracle needs at least 2 draws, got {mc}")));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Ok(OracleEstimate { estimate: 0.0, std_error: 0.0 });
    }
    let mut rng = stream.rng();
    let mut normals = vec![0.0; field.d];
    let mut w = vec![0.0; field.d];
    let mut acc = MomentAccumulator::default();
    for _ in 0..mc {
        field.spectral(&mut rng, &mut normals, &mut w);
        acc.push(w.iter().zip(x).map(|(a, b)| a * b).fold(0.0, f64::max));
    }
    Ok(acc.finish())
}

/// Lower Cholesky factor of a positive semidefinite matrix. Zero pivots are
/// allowed only when the rest of their column vanishes (a site at the origin).
fn semidefinite_cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    let scale = (0..d).map(|i| a[i * d + i].abs()).fold(1.0, f64::max);
    let tol = 1e-12 * scale;
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let diag = a[j * d + j] - (0..j).map(|k| l[j * d + k] * l[j * d + k]).sum::<f64>();
        if diag < -tol {
            return Err(Error::Cholesky(format!("negative pivot {diag:e} at site {j}")));
        }
        if diag <= tol {
            for i in j + 1..d {
                let rem = a[i * d + j] - (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
                if rem.abs() > 1e-9 * scale {
                    return Err(Error::Cholesky(format!("degenerate covariance at site {j}")));
                }
            }
            continue;
        }
        let ljj = diag.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let rem = a[i * d + j] - (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum::<f64>();
            l[i * d + j] = rem / ljj;
        }
    }
    Ok(l)
}

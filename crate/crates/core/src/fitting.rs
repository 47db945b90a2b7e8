//! Weighted least squares estimation of parametric stdf families.
//!
//! Minimises `r(theta)' Omega r(theta)` with residuals
//! `r_m(theta) = l_theta(c_m) - pilot_m` over a box. One-parameter families use
//! a coarse scan followed by golden-section search; larger families use
//! Nelder–Mead restarted from the best points of a `5^p` lattice, with
//! reflection at the box faces.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::models::{hr_pairwise_stdf, semivariogram};

/// Parametric stdf family being fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StdfFamily {
    /// Bivariate logistic, parameter `[theta]`.
    Logistic,
    /// Brown–Resnick at the given sites, parameters `[alpha, rho]`. Only
    /// points with at most two nonzero coordinates are supported.
    BrownResnick { sites: Vec<[f64; 2]> },
}

impl StdfFamily {
    pub fn brown_resnick_grid() -> Self {
        StdfFamily::BrownResnick { sites: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]] }
    }

    pub fn n_params(&self) -> usize {
        match self {
            StdfFamily::Logistic => 1,
            StdfFamily::BrownResnick { .. } => 2,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            StdfFamily::Logistic => 2,
            StdfFamily::BrownResnick { sites } => sites.len(),
        }
    }

    pub fn param_names(&self) -> Vec<&'static str> {
        match self {
            StdfFamily::Logistic => vec!["theta"],
            StdfFamily::BrownResnick { .. } => vec!["alpha", "rho"],
        }
    }

    pub fn default_bounds(&self) -> Vec<[f64; 2]> {
        match self {
            StdfFamily::Logistic => vec![[1e-3, 1.0]],
            StdfFamily::BrownResnick { .. } => vec![[0.01, 2.0], [0.01, 20.0]],
        }
    }

    /// `l_theta(x)`.
    pub fn stdf(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        match self {
            StdfFamily::Logistic => {
                let t = theta[0];
                let m = x[0].max(x[1]);
                if m == 0.0 {
                    return Ok(0.0);
                }
                Ok(m * ((x[0] / m).powf(1.0 / t) + (x[1] / m).powf(1.0 / t)).powf(t))
            }
            StdfFamily::BrownResnick { sites } => {
                let (alpha, rho) = (theta[0], theta[1]);
                let nz: Vec<usize> = (0..x.len()).filter(|&j| x[j] > 0.0).collect();
                match nz.as_slice() {
                    [] => Ok(0.0),
                    [j] => Ok(x[*j]),
                    [i, j] => {
                        let h = [sites[*i][0] - sites[*j][0], sites[*i][1] - sites[*j][1]];
                        hr_pairwise_stdf(semivariogram(h, rho, alpha), x[*i], x[*j])
                    }
                    _ => Err(domain("Brown–Resnick fitting supports points with at most two nonzero coordinates")),
                }
            }
        }
    }
}

/// Fit points, weight matrix and family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub points: Vec<Vec<f64>>,
    /// `q x q` symmetric positive definite; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Vec<f64>>>,
    #[serde(flatten)]
    pub family: StdfFamily,
    /// Box constraints per parameter; family defaults when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<[f64; 2]>>,
}

impl FitConfig {
    pub fn new(family: StdfFamily, points: Vec<Vec<f64>>) -> Self {
        Self { points, weights: None, family, bounds: None }
    }

    /// Logistic family at `(1/2,1/2), (1,1/2), (1/2,1), (1,1)`.
    pub fn logistic_default() -> Self {
        Self::new(
            StdfFamily::Logistic,
            vec![vec![0.5, 0.5], vec![1.0, 0.5], vec![0.5, 1.0], vec![1.0, 1.0]],
        )
    }

    /// Brown–Resnick on the 2 x 2 grid at all six points with two unit entries.
    pub fn brown_resnick_default() -> Self {
        let mut points = Vec::new();
        for i in 0..4 {
            for j in i + 1..4 {
                let mut c = vec![0.0; 4];
                c[i] = 1.0;
                c[j] = 1.0;
                points.push(c);
            }
        }
        Self::new(StdfFamily::brown_resnick_grid(), points)
    }

    pub fn bounds(&self) -> Vec<[f64; 2]> {
        self.bounds.clone().unwrap_or_else(|| self.family.default_bounds())
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.points.len();
        let p = self.family.n_params();
        if q < p {
            return Err(Error::InvalidConfig(format!("need at least {p} fit points, got {q}")));
        }
        for (a, c) in self.points.iter().enumerate() {
            if c.len() != self.family.dim() {
                return Err(Error::DimensionMismatch { expected: self.family.dim(), got: c.len() });
            }
            if c.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(domain("fit points must be finite and nonnegative"));
            }
            if self.points[..a].contains(c) {
                return Err(Error::InvalidConfig(format!("duplicate fit point {c:?}")));
            }
            if let StdfFamily::BrownResnick { .. } = self.family {
                if c.iter().filter(|v| **v > 0.0).count() > 2 {
                    return Err(Error::InvalidConfig(format!(
                        "Brown–Resnick fit point {c:?} has more than two nonzero coordinates"
                    )));
                }
            }
        }
        let bounds = self.bounds();
        if bounds.len() != p {
            return Err(Error::InfeasibleBounds(format!("expected {p} bound pairs, got {}", bounds.len())));
        }
        for b in &bounds {
            if !(b[0] < b[1]) || !b[0].is_finite() || !b[1].is_finite() {
                return Err(Error::InfeasibleBounds(format!("empty or non-finite interval {b:?}")));
            }
        }
        match self.family {
            StdfFamily::Logistic if bounds[0][0] <= 0.0 || bounds[0][1] > 1.0 => {
                return Err(Error::InfeasibleBounds("logistic theta bounds must lie in (0, 1]".into()));
            }
            StdfFamily::BrownResnick { .. }
                if bounds[0][0] <= 0.0 || bounds[0][1] > 2.0 || bounds[1][0] <= 0.0 =>
            {
                return Err(Error::InfeasibleBounds("need alpha in (0, 2] and rho > 0".into()));
            }
            _ => {}
        }
        if let Some(w) = &self.weights {
            check_spd(w, q)?;
        }
        Ok(())
    }
}

fn check_spd(w: &[Vec<f64>], q: usize) -> Result<()> {
    if w.len() != q || w.iter().any(|r| r.len() != q) {
        return Err(Error::InvalidConfig(format!("weight matrix must be {q} x {q}")));
    }
    for a in 0..q {
        for b in 0..a {
            if (w[a][b] - w[b][a]).abs() > 1e-12 * (1.0 + w[a][b].abs()) {
                return Err(Error::InvalidConfig("weight matrix is not symmetric".into()));
            }
        }
    }
    let mut l = vec![0.0; q * q];
    for j in 0..q {
        let diag = w[j][j] - (0..j).map(|k| l[j * q + k] * l[j * q + k]).sum::<f64>();
        if !(diag > 0.0) {
            return Err(Error::InvalidConfig("weight matrix is not positive definite".into()));
        }
        l[j * q + j] = diag.sqrt();
        for i in j + 1..q {
            l[i * q + j] = (w[i][j] - (0..j).map(|k| l[i * q + k] * l[j * q + k]).sum::<f64>()) / l[j * q + j];
        }
    }
    Ok(())
}

/// Result of a weighted least squares fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta_hat: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

/// The weighted least squares objective at `theta`.
pub fn objective(pilot: &[f64], cfg: &FitConfig, theta: &[f64]) -> Result<f64> {
    let resid: Vec<f64> = cfg
        .points
        .iter()
        .zip(pilot)
        .map(|(c, &p)| Ok(cfg.family.stdf(theta, c)? - p))
        .collect::<Result<_>>()?;
    Ok(match &cfg.weights {
        None => resid.iter().map(|r| r * r).sum(),
        Some(w) => {
            let mut s = 0.0;
            for (a, ra) in resid.iter().enumerate() {
                for (b, rb) in resid.iter().enumerate() {
                    s += ra * w[a][b] * rb;
                }
            }
            s
        }
    })
}

/// Weighted least squares fit of `cfg.family` to pilot estimates at `cfg.points`.
///
/// Pilot values outside `[0, sum_j c_j]` are clamped with a warning.
pub fn wls_fit(pilot: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if pilot.len() != cfg.points.len() {
        return Err(Error::DimensionMismatch { expected: cfg.points.len(), got: pilot.len() });
    }
    let mut clamped = Vec::with_capacity(pilot.len());
    for (c, &v) in cfg.points.iter().zip(pilot) {
        if !v.is_finite() {
            return Err(domain(format!("pilot estimate {v} is not finite")));
        }
        let hi: f64 = c.iter().sum();
        let w = v.clamp(0.0, hi);
        if w != v {
            log::warn!("pilot estimate {v} at {c:?} clamped to {w}");
        }
        clamped.push(w);
    }
    let bounds = cfg.bounds();
    let f = |theta: &[f64]| objective(&clamped, cfg, theta);
    if bounds.len() == 1 {
        golden_section(&f, bounds[0])
    } else {
        nelder_mead_restarts(&f, &bounds)
    }
}

fn golden_section(f: &dyn Fn(&[f64]) -> Result<f64>, bounds: [f64; 2]) -> Result<FitResult> {
    const SCAN: usize = 200;
    let [lo, hi] = bounds;
    let step = (hi - lo) / SCAN as f64;
    let mut best = (0, f64::INFINITY);
    for i in 0..=SCAN {
        let v = f(&[lo + i as f64 * step])?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let mut a = lo + best.0.saturating_sub(1) as f64 * step;
    let mut b = (lo + (best.0 + 1) as f64 * step).min(hi);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(&[c])?;
    let mut fd = f(&[d])?;
    let mut iterations = SCAN + 3;
    while (b - a) > 1e-13 * (1.0 + a.abs()) && iterations < 10_000 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(&[c])?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(&[d])?;
        }
        iterations += 1;
    }
    let mut out = if fc <= fd { (c, fc) } else { (d, fd) };
    // The minimum may sit on a face of the box.
    for edge in [lo, hi] {
        let v = f(&[edge])?;
        if v < out.1 {
            out = (edge, v);
        }
    }
    Ok(FitResult { theta_hat: vec![out.0], objective: out.1, iterations })
}

fn reflect(x: f64, [lo, hi]: [f64; 2]) -> f64 {
    let mut y = x;
    if y < lo {
        y = lo + (lo - y);
    }
    if y > hi {
        y = hi - (y - hi);
    }
    y.clamp(lo, hi)
}

struct NmOutcome {
    x: Vec<f64>,
    f: f64,
    iterations: usize,
    converged: bool,
}

fn nelder_mead(
    f: &dyn Fn(&[f64]) -> Result<f64>,
    start: &[f64],
    bounds: &[[f64; 2]],
    max_iter: usize,
) -> Result<NmOutcome> {
    let p = start.len();
    let ranges: Vec<f64> = bounds.iter().map(|b| b[1] - b[0]).collect();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..p {
        let mut v = start.to_vec();
        let step = 0.1 * ranges[i];
        v[i] = if v[i] + step <= bounds[i][1] { v[i] + step } else { v[i] - step };
        simplex.push(v);
    }
    let mut fs: Vec<f64> = simplex.iter().map(|v| f(v)).collect::<Result<_>>()?;
    let project = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(bounds).map(|(&x, &b)| reflect(x, b)).collect() };

    for it in 0..max_iter {
        let mut idx: Vec<usize> = (0..=p).collect();
        idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        fs = idx.iter().map(|&i| fs[i]).collect();

        let diam = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).zip(&ranges).map(|((a, b), r)| (a - b).abs() / r))
            .fold(0.0, f64::max);
        if diam <= 1e-11 {
            return Ok(NmOutcome { x: simplex[0].clone(), f: fs[0], iterations: it, converged: true });
        }

        let centroid: Vec<f64> = (0..p)
            .map(|j| simplex[..p].iter().map(|v| v[j]).sum::<f64>() / p as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            project(centroid.iter().zip(&simplex[p]).map(|(c, w)| c + t * (w - c)).collect())
        };
        let xr = along(-1.0);
        let fr = f(&xr)?;
        if fr < fs[0] {
            let xe = along(-2.0);
            let fe = f(&xe)?;
            if fe < fr {
                simplex[p] = xe;
                fs[p] = fe;
            } else {
                simplex[p] = xr;
                fs[p] = fr;
            }
            continue;
        }
        if fr < fs[p - 1] {
            simplex[p] = xr;
            fs[p] = fr;
            continue;
        }
        let (xc, fc) = if fr < fs[p] {
            let xc = along(-0.5);
            let fc = f(&xc)?;
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = f(&xc)?;
            (xc, fc)
        };
        if fc < fs[p].min(fr) {
            simplex[p] = xc;
            fs[p] = fc;
            continue;
        }
        for i in 1..=p {
            simplex[i] = project(simplex[0].iter().zip(&simplex[i]).map(|(b, v)| b + 0.5 * (v - b)).collect());
            fs[i] = f(&simplex[i])?;
        }
    }
    let best = (0..=p).min_by(|&a, &b| fs[a].total_cmp(&fs[b])).unwrap_or(0);
    Ok(NmOutcome { x: simplex[best].clone(), f: fs[best], iterations: max_iter, converged: false })
}

fn nelder_mead_restarts(f: &dyn Fn(&[f64]) -> Result<f64>, bounds: &[[f64; 2]]) -> Result<FitResult> {
    const LATTICE: usize = 5;
    const RESTARTS: usize = 5;
    const MAX_ITER: usize = 5_000;
    let p = bounds.len();
    let mut lattice: Vec<(Vec<f64>, f64)> = Vec::new();
    let total = LATTICE.pow(p as u32);
    for code in 0..total {
        let mut c = code;
        let x: Vec<f64> = bounds
            .iter()
            .map(|b| {
                let i = c % LATTICE;
                c /= LATTICE;
                b[0] + (i as f64 + 0.5) / LATTICE as f64 * (b[1] - b[0])
            })
            .collect();
        let v = f(&x)?;
        lattice.push((x, v));
    }
    lattice.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut iterations = total;
    let mut best: Option<NmOutcome> = None;
    for (start, _) in lattice.iter().take(RESTARTS) {
        let first = nelder_mead(f, start, bounds, MAX_ITER)?;
        iterations += first.iterations;
        // Restart once from the converged point to escape a collapsed simplex.
        let second = nelder_mead(f, &first.x, bounds, MAX_ITER)?;
        iterations += second.iterations;
        let run = if second.f <= first.f { second } else { first };
        if best.as_ref().is_none_or(|b| run.f < b.f) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    if !best.converged {
        return Err(Error::NotConverged { theta: best.x, objective: best.f, iterations });
    }
    Ok(FitResult { theta_hat: best.x, objective: best.f, iterations })
}

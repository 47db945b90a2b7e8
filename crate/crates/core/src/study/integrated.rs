//! Integrated squared bias, variance and MSE over `[0,1]^d`.
//!
//! Each replicate draws one uniform point `U` and two independent samples
//! `A`, `B`. With errors `e = l_hat(U) - l(U)`:
//!
//! - `mse = (e_A^2 + e_B^2) / 2` estimates the integrated MSE;
//! - `e_A e_B` estimates the integrated squared bias, because the two samples
//!   are independent given `U`;
//! - `(e_A - e_B)^2 / 2` estimates the integrated variance.
//!
//! The three identities hold per replicate, so the decomposition is exact in
//! the averages too.

use rand::Rng;
use rayon::prelude::*;

use super::{MetricRow, OracleTable, StudyConfig, StudyEstimator, StudyResult, DIFFERENCE_LABEL};
use crate::error::{Error, Result};
use crate::models::{sample, true_stdf, ModelSpec};
use crate::ranks::compute_ranks;
use crate::stats::mean_se;

/// The evaluation point of replicate `i`; independent of the data streams.
pub fn uniform_point(cfg: &StudyConfig, i: usize) -> Vec<f64> {
    let mut rng = cfg.replicate_stream(i).substream(0).rng();
    (0..cfg.model.dim()).map(|_| rng.random::<f64>()).collect()
}

/// Errors `(e_A, e_B)` for every `(k, estimator)` pair of one replicate.
fn replicate(
    cfg: &StudyConfig,
    estimators: &[&dyn StudyEstimator],
    oracle: Option<&OracleTable>,
    i: usize,
) -> Result<Vec<[f64; 2]>> {
    let u = uniform_point(cfg, i);
    let truth = match oracle {
        Some(t) => t.values[i],
        None => true_stdf(&cfg.model, &u)?,
    };
    let data_stream = cfg.replicate_stream(i).substream(1);
    let ranks = [
        compute_ranks(&sample(&cfg.model, cfg.n, data_stream.substream(0))?)?,
        compute_ranks(&sample(&cfg.model, cfg.n, data_stream.substream(1))?)?,
    ];
    let mut out = Vec::with_capacity(cfg.k_values.len() * estimators.len());
    for &k in &cfg.k_values {
        for est in estimators {
            let ea = est.estimate(&ranks[0], k as f64, &u)? - truth;
            let eb = est.estimate(&ranks[1], k as f64, &u)? - truth;
            out.push([ea, eb]);
        }
    }
    Ok(out)
}

/// Integrated error metrics per `k` and estimator, plus paired
/// beta-minus-empirical differences when both are present.
///
/// Brown–Resnick models in more than two dimensions need the `oracle` truth
/// table (see [`super::precompute_oracle`]).
pub fn integrated_error_study(
    cfg: &StudyConfig,
    estimators: &[&dyn StudyEstimator],
    oracle: Option<&OracleTable>,
) -> Result<StudyResult> {
    cfg.validate()?;
    if let Some(t) = oracle {
        t.check(cfg)?;
    } else if matches!(cfg.model, ModelSpec::BrownResnick { .. }) && cfg.model.dim() > 2 {
        return Err(Error::OracleUnavailable(
            "Brown–Resnick truth needs a precomputed oracle table; run `stdf study --precompute-oracle` first".into(),
        ));
    }
    log::info!("mse study: {} replicates of n = {}", cfg.replications, cfg.n);
    let errors: Vec<Vec<[f64; 2]>> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| replicate(cfg, estimators, oracle, i))
        .collect::<Result<_>>()?;

    let ne = estimators.len();
    let metrics = |e: [f64; 2]| [0.5 * (e[0] * e[0] + e[1] * e[1]), e[0] * e[1], 0.5 * (e[0] - e[1]) * (e[0] - e[1])];
    const NAMES: [&str; 3] = ["mse", "sq_bias", "variance"];
    let beta = estimators.iter().position(|e| e.label() == "beta");
    let emp = estimators.iter().position(|e| e.label() == "empirical");

    let mut rows = Vec::new();
    for (ki, &k) in cfg.k_values.iter().enumerate() {
        let per_est: Vec<Vec<[f64; 3]>> = (0..ne)
            .map(|ei| errors.iter().map(|rep| metrics(rep[ki * ne + ei])).collect())
            .collect();
        for (ei, est) in estimators.iter().enumerate() {
            for (m, name) in NAMES.iter().enumerate() {
                let vals: Vec<f64> = per_est[ei].iter().map(|v| v[m]).collect();
                let s = mean_se(&vals);
                rows.push(MetricRow { estimator: est.label().to_string(), k, metric: name.to_string(), value: s.mean, stderr: s.se });
            }
        }
        if let (Some(b), Some(e)) = (beta, emp) {
            for (m, name) in NAMES.iter().enumerate() {
                let vals: Vec<f64> = per_est[b].iter().zip(&per_est[e]).map(|(x, y)| x[m] - y[m]).collect();
                let s = mean_se(&vals);
                rows.push(MetricRow { estimator: DIFFERENCE_LABEL.to_string(), k, metric: name.to_string(), value: s.mean, stderr: s.se });
            }
        }
    }
    Ok(StudyResult { mode: cfg.mode.name().to_string(), rows, covariances: Vec::new() })
}

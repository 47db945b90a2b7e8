//! Root mean squared error of weighted least squares fits per pilot estimator.

use rayon::prelude::*;

use super::{MetricRow, StudyConfig, StudyEstimator, StudyMode, StudyResult, DIFFERENCE_LABEL};
use crate::error::{Error, Result};
use crate::fitting::wls_fit;
use crate::models::sample;
use crate::ranks::compute_ranks;
use crate::stats::mean_se;

/// For each `k`, pilot estimator and parameter: `rmse_<p>`, `mean_<p>` and
/// the number of non-converged fits (`failures`). Non-converged fits are
/// excluded from the averages.
pub fn wls_rmse_study(cfg: &StudyConfig, estimators: &[&dyn StudyEstimator]) -> Result<StudyResult> {
    cfg.validate()?;
    let StudyMode::WlsRmse { fit } = &cfg.mode else {
        return Err(Error::InvalidConfig("wls_rmse_study needs a wls-rmse config".into()));
    };
    let truth = cfg.model.parameters();
    let names = fit.family.param_names();
    let ne = estimators.len();
    log::info!("wls-rmse study: {} replicates of n = {}", cfg.replications, cfg.n);

    let fits: Vec<Vec<Option<Vec<f64>>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| {
            let data = sample(&cfg.model, cfg.n, cfg.replicate_stream(i))?;
            let r = compute_ranks(&data)?;
            let mut out = Vec::with_capacity(cfg.k_values.len() * ne);
            for &k in &cfg.k_values {
                for est in estimators {
                    let pilot: Vec<f64> =
                        fit.points.iter().map(|c| est.estimate(&r, k as f64, c)).collect::<Result<_>>()?;
                    match wls_fit(&pilot, fit) {
                        Ok(res) => out.push(Some(res.theta_hat)),
                        Err(Error::NotConverged { .. }) => {
                            log::warn!("replicate {i}, k = {k}, {}: fit did not converge", est.label());
                            out.push(None)
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let beta = estimators.iter().position(|e| e.label() == "beta");
    let emp = estimators.iter().position(|e| e.label() == "empirical");
    let row = |estimator: &str, k, metric: String, value, stderr| MetricRow {
        estimator: estimator.to_string(),
        k,
        metric,
        value,
        stderr,
    };
    let mut rows = Vec::new();
    for (ki, &k) in cfg.k_values.iter().enumerate() {
        for (ei, est) in estimators.iter().enumerate() {
            let ok: Vec<&Vec<f64>> = fits.iter().filter_map(|f| f[ki * ne + ei].as_ref()).collect();
            let failures = fits.len() - ok.len();
            for (p, name) in names.iter().enumerate() {
                let sq: Vec<f64> = ok.iter().map(|t| (t[p] - truth[p]).powi(2)).collect();
                let mse = mean_se(&sq);
                let rmse = mse.mean.sqrt();
                let se = if rmse > 0.0 { mse.se / (2.0 * rmse) } else { 0.0 };
                rows.push(row(est.label(), k, format!("rmse_{name}"), rmse, se));
                let mean = mean_se(&ok.iter().map(|t| t[p]).collect::<Vec<_>>());
                rows.push(row(est.label(), k, format!("mean_{name}"), mean.mean, mean.se));
            }
            rows.push(row(est.label(), k, "failures".into(), failures as f64, 0.0));
        }
        if let (Some(b), Some(e)) = (beta, emp) {
            // Paired over replicates where both fits converged.
            let pairs: Vec<(&Vec<f64>, &Vec<f64>)> = fits
                .iter()
                .filter_map(|f| Some((f[ki * ne + b].as_ref()?, f[ki * ne + e].as_ref()?)))
                .collect();
            for (p, name) in names.iter().enumerate() {
                let d: Vec<f64> =
                    pairs.iter().map(|(tb, te)| (tb[p] - truth[p]).powi(2) - (te[p] - truth[p]).powi(2)).collect();
                let s = mean_se(&d);
                rows.push(row(DIFFERENCE_LABEL, k, format!("mse_{name}"), s.mean, s.se));
            }
        }
    }
    Ok(StudyResult { mode: cfg.mode.name().to_string(), rows, covariances: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::FitConfig;
    use crate::models::{true_stdf, ModelSpec};
    use crate::ranks::RankMatrix;

    struct Exact(ModelSpec);

    impl StudyEstimator for Exact {
        fn label(&self) -> &str {
            "exact"
        }
        fn estimate(&self, _r: &RankMatrix, _k: f64, x: &[f64]) -> Result<f64> {
            true_stdf(&self.0, x)
        }
    }

    fn cfg(model: ModelSpec, fit: FitConfig) -> StudyConfig {
        StudyConfig {
            model,
            n: 100,
            k_values: vec![10],
            replications: 3,
            estimators: vec![crate::estimators::StdfEstimator::Beta],
            seed: 1,
            offset: 0.5,
            mode: StudyMode::WlsRmse { fit },
        }
    }

    #[test]
    fn exact_pilot_has_zero_rmse() {
        let c = cfg(ModelSpec::logistic(0.7).unwrap(), FitConfig::logistic_default());
        let res = wls_rmse_study(&c, &[&Exact(c.model.clone())]).unwrap();
        assert!(res.get("exact", 10, "rmse_theta").unwrap().value < 1e-6);
        assert_eq!(res.get("exact", 10, "failures").unwrap().value, 0.0);

        let c = cfg(ModelSpec::brown_resnick_grid(1.0, 1.0).unwrap(), FitConfig::brown_resnick_default());
        let res = wls_rmse_study(&c, &[&Exact(c.model.clone())]).unwrap();
        assert!(res.get("exact", 10, "rmse_alpha").unwrap().value < 1e-4);
        assert!(res.get("exact", 10, "rmse_rho").unwrap().value < 1e-4);
    }

    #[test]
    fn family_must_match_model() {
        let c = cfg(ModelSpec::logistic(0.7).unwrap(), FitConfig::brown_resnick_default());
        assert!(wls_rmse_study(&c, &[&Exact(c.model.clone())]).is_err());
    }
}

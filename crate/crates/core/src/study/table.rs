//! Bootstrap covariance comparison on repeated data samples.

use rayon::prelude::*;
use serde::Deserialize;

use super::{MetricRow, StudyConfig, StudyMode, StudyResult};
use crate::error::{Error, Result};
use crate::models::sample;
use crate::ranks::compute_ranks;
use crate::resampling::{bootstrap_covariance, BootstrapConfig, CovarianceEstimate};
use crate::stats::mean_se;

/// Published Clayton covariance table (checked-in data file).
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Table1Reference {
    pub labels: Vec<String>,
    pub truth: Vec<Vec<f64>>,
    pub beta_average: Vec<Vec<f64>>,
    pub beta_mse_e4: Vec<Vec<f64>>,
    pub multiplier_average: Vec<Vec<f64>>,
    pub multiplier_mse_e4: Vec<Vec<f64>>,
}

pub fn table1_reference() -> Table1Reference {
    serde_json::from_str(include_str!("../../data/table1_reference.json")).expect("bundled reference table parses")
}

/// For every `k` and bootstrap method: entrywise averages of the per-sample
/// covariance matrices (`cov:<a>:<b>`) and, given a reference, their mean
/// squared errors (`mse:<a>:<b>`), over the upper triangle.
pub fn bootstrap_comparison_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let StudyMode::BootstrapTable(t) = &cfg.mode else {
        return Err(Error::InvalidConfig("bootstrap_comparison_study needs a bootstrap-table config".into()));
    };
    let q = t.points.len();
    let mut rows = Vec::new();
    let mut covariances = Vec::new();
    for &k in &cfg.k_values {
        let configs: Vec<BootstrapConfig> = t
            .methods
            .iter()
            .map(|&m| {
                let mut b = BootstrapConfig::new(m, k as f64, t.points.clone(), t.bootstrap_replications);
                b.labels = t.labels.clone();
                b.law = t.law.clone();
                b
            })
            .collect();
        log::info!(
            "bootstrap-table study: k = {k}, {} samples x {} replications",
            cfg.replications,
            t.bootstrap_replications
        );
        let estimates: Vec<Vec<CovarianceEstimate>> = (0..cfg.replications)
            .into_par_iter()
            .map(|s| {
                let stream = cfg.replicate_stream(s);
                let r = compute_ranks(&sample(&cfg.model, cfg.n, stream.substream(0))?)?;
                configs
                    .iter()
                    .enumerate()
                    .map(|(mi, b)| bootstrap_covariance(&r, b, stream.substream(1 + mi as u64)))
                    .collect()
            })
            .collect::<Result<_>>()?;

        for (mi, b) in configs.iter().enumerate() {
            let labels = b.labels();
            let mut avg = vec![vec![0.0; q]; q];
            for a in 0..q {
                for c in a..q {
                    let vals: Vec<f64> = estimates.iter().map(|e| e[mi].matrix[a][c]).collect();
                    let s = mean_se(&vals);
                    avg[a][c] = s.mean;
                    avg[c][a] = s.mean;
                    let entry = format!("{}:{}", labels[a], labels[c]);
                    rows.push(MetricRow {
                        estimator: b.method.label().to_string(),
                        k,
                        metric: format!("cov:{entry}"),
                        value: s.mean,
                        stderr: s.se,
                    });
                    if let Some(reference) = &t.reference {
                        let sq: Vec<f64> = vals.iter().map(|v| (v - reference[a][c]).powi(2)).collect();
                        let m = mean_se(&sq);
                        rows.push(MetricRow {
                            estimator: b.method.label().to_string(),
                            k,
                            metric: format!("mse:{entry}"),
                            value: m.mean,
                            stderr: m.se,
                        });
                    }
                }
            }
            covariances.push(CovarianceEstimate {
                method: b.method,
                labels,
                points: t.points.clone(),
                matrix: avg,
                replications: t.bootstrap_replications,
            });
        }
    }
    Ok(StudyResult { mode: cfg.mode.name().to_string(), rows, covariances })
}

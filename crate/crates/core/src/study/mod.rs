//! Monte Carlo study harness.
//!
//! Three modes share one [`StudyConfig`]:
//!
//! - `mse`: integrated squared bias, variance and MSE of stdf estimators over
//!   `[0,1]^d` ([`integrated_error_study`]);
//! - `wls-rmse`: root mean squared error of weighted least squares fits
//!   ([`wls_rmse_study`]);
//! - `bootstrap-table`: averaged bootstrap covariance matrices and their MSE
//!   against a reference ([`bootstrap_comparison_study`]).
//!
//! Replicate `i` always draws from `RngStream::new(seed, 0).substream(i)`, so
//! results do not depend on the number of worker threads.

mod integrated;
mod oracle;
mod table;
mod wls;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{StdfConfig, StdfEstimator};
use crate::fitting::{FitConfig, StdfFamily};
use crate::models::ModelSpec;
use crate::ranks::RankMatrix;
use crate::resampling::{BootstrapConfig, BootstrapMethod, CovarianceEstimate, MultiplierLaw};
use crate::rng::RngStream;

pub use integrated::{integrated_error_study, uniform_point};
pub use oracle::{load_oracle, oracle_cache_path, oracle_key, precompute_oracle, store_oracle, OracleTable};
pub use table::{bootstrap_comparison_study, table1_reference, Table1Reference};
pub use wls::wls_rmse_study;

/// Label of the paired beta-minus-empirical difference rows.
pub const DIFFERENCE_LABEL: &str = "beta_minus_empirical";

/// Pilot estimator used by the studies. Implemented for [`StdfEstimator`]
/// and by test stubs.
pub trait StudyEstimator: Sync {
    fn label(&self) -> &str;
    fn estimate(&self, r: &RankMatrix, k: f64, x: &[f64]) -> Result<f64>;
}

/// A rank-based stdf estimator with a fixed empirical-stdf offset.
#[derive(Debug, Clone, Copy)]
pub struct RankEstimator {
    pub kind: StdfEstimator,
    pub offset: f64,
}

impl StudyEstimator for RankEstimator {
    fn label(&self) -> &str {
        self.kind.label()
    }

    fn estimate(&self, r: &RankMatrix, k: f64, x: &[f64]) -> Result<f64> {
        self.kind.evaluate(r, &StdfConfig::new(k, self.offset)?, x)
    }
}

/// Monte Carlo settings of the Brown–Resnick truth table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSettings {
    #[serde(default = "default_mc")]
    pub mc: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_mc() -> usize {
    1_000_000
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { mc: default_mc(), seed: 0 }
    }
}

/// Bootstrap-table settings. `replications` of the study counts data samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSettings {
    pub bootstrap_replications: usize,
    pub points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default = "default_methods")]
    pub methods: Vec<BootstrapMethod>,
    /// Reference covariance; MSE rows are reported only when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub law: MultiplierLaw,
}

fn default_methods() -> Vec<BootstrapMethod> {
    vec![BootstrapMethod::Beta, BootstrapMethod::Multiplier]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum StudyMode {
    Mse {
        #[serde(default)]
        oracle: OracleSettings,
    },
    WlsRmse {
        fit: FitConfig,
    },
    BootstrapTable(TableSettings),
}

impl StudyMode {
    pub fn name(&self) -> &'static str {
        match self {
            StudyMode::Mse { .. } => "mse",
            StudyMode::WlsRmse { .. } => "wls-rmse",
            StudyMode::BootstrapTable(_) => "bootstrap-table",
        }
    }
}

/// Declarative description of one Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: ModelSpec,
    pub n: usize,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<StdfEstimator>,
    pub seed: u64,
    /// Rank-threshold offset of the empirical stdf.
    #[serde(default = "default_offset")]
    pub offset: f64,
    #[serde(flatten)]
    pub mode: StudyMode,
}

fn default_k_values() -> Vec<usize> {
    vec![25, 50, 75, 100, 125, 150]
}

fn default_estimators() -> Vec<StdfEstimator> {
    vec![StdfEstimator::Empirical, StdfEstimator::Beta]
}

fn default_offset() -> f64 {
    0.5
}

/// Scale of a named design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Paper,
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            _ => Err(Error::InvalidConfig(format!("unknown preset {s:?} (expected paper or desk)"))),
        }
    }
}

/// Names accepted by [`StudyConfig::design`].
pub const DESIGNS: [&str; 6] = [
    "fig1-logistic",
    "fig1-max-linear",
    "fig1-brown-resnick",
    "fig2-logistic",
    "fig2-brown-resnick",
    "table1",
];

impl StudyConfig {
    /// One of the published designs ([`DESIGNS`]) at paper scale.
    pub fn design(name: &str) -> Result<Self> {
        let mse = |model: ModelSpec, seed: u64| StudyConfig {
            model,
            n: 1000,
            k_values: default_k_values(),
            replications: 20_000,
            estimators: default_estimators(),
            seed,
            offset: default_offset(),
            mode: StudyMode::Mse { oracle: OracleSettings::default() },
        };
        let wls = |model: ModelSpec, fit: FitConfig, seed: u64| StudyConfig {
            replications: 500,
            mode: StudyMode::WlsRmse { fit },
            ..mse(model, seed)
        };
        Ok(match name {
            "fig1-logistic" => mse(ModelSpec::logistic(0.7)?, 101),
            "fig1-max-linear" => mse(ModelSpec::max_linear_two_factor(&[0.3, 0.5, 0.9])?, 102),
            "fig1-brown-resnick" => mse(ModelSpec::brown_resnick_grid(1.0, 1.0)?, 103),
            "fig2-logistic" => wls(ModelSpec::logistic(0.7)?, FitConfig::logistic_default(), 201),
            "fig2-brown-resnick" => {
                wls(ModelSpec::brown_resnick_grid(1.0, 1.0)?, FitConfig::brown_resnick_default(), 202)
            }
            "table1" => {
                let (points, labels) = BootstrapConfig::unit_circle_points();
                StudyConfig {
                    model: ModelSpec::clayton(0.5)?,
                    n: 1000,
                    k_values: vec![50],
                    replications: 1000,
                    estimators: default_estimators(),
                    seed: 301,
                    offset: default_offset(),
                    mode: StudyMode::BootstrapTable(TableSettings {
                        bootstrap_replications: 500,
                        points,
                        labels: Some(labels),
                        methods: default_methods(),
                        reference: Some(table1_reference().truth),
                        law: MultiplierLaw::default(),
                    }),
                }
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown design {name:?}; expected one of {}",
                    DESIGNS.join(", ")
                )))
            }
        })
    }

    /// Sets the replication counts of `preset`: 20 000 (paper) or 2 000 (desk)
    /// samples for `mse`, 500 for `wls-rmse`, and 1000 x 500 (paper) or
    /// 200 x 200 (desk) samples x bootstrap replications for `bootstrap-table`.
    pub fn with_preset(mut self, preset: Preset) -> Self {
        match (&mut self.mode, preset) {
            (StudyMode::Mse { .. }, Preset::Paper) => self.replications = 20_000,
            (StudyMode::Mse { .. }, Preset::Desk) => self.replications = 2_000,
            (StudyMode::WlsRmse { .. }, _) => self.replications = 500,
            (StudyMode::BootstrapTable(t), Preset::Paper) => {
                self.replications = 1000;
                t.bootstrap_replications = 500;
            }
            (StudyMode::BootstrapTable(t), Preset::Desk) => {
                self.replications = 200;
                t.bootstrap_replications = 200;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.replications < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 replications, got {}", self.replications)));
        }
        if self.k_values.is_empty() {
            return Err(Error::InvalidConfig("no k values".into()));
        }
        if let Some(k) = self.k_values.iter().find(|&&k| k == 0 || k > self.n) {
            return Err(Error::InvalidConfig(format!("k = {k} outside 1..=n = {}", self.n)));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimators".into()));
        }
        StdfConfig::new(1.0, self.offset)?;
        let d = self.model.dim();
        match &self.mode {
            StudyMode::Mse { oracle } => {
                if !self.model.is_stdf() {
                    return Err(Error::InvalidConfig(format!("model {} has no stdf", self.model.name())));
                }
                if oracle.mc < 2 {
                    return Err(Error::InvalidConfig("oracle mc must be at least 2".into()));
                }
            }
            StudyMode::WlsRmse { fit } => {
                fit.validate()?;
                let matches = match (&fit.family, &self.model) {
                    (StdfFamily::Logistic, ModelSpec::Logistic { .. }) => true,
                    (StdfFamily::BrownResnick { sites }, ModelSpec::BrownResnick { sites: s, .. }) => sites == s,
                    _ => false,
                };
                if !matches {
                    return Err(Error::InvalidConfig(format!(
                        "fit family does not match the {} model",
                        self.model.name()
                    )));
                }
            }
            StudyMode::BootstrapTable(t) => {
                if d != 2 {
                    return Err(Error::DimensionMismatch { expected: 2, got: d });
                }
                let mut b = BootstrapConfig::new(BootstrapMethod::Beta, 1.0, t.points.clone(), t.bootstrap_replications);
                b.labels = t.labels.clone();
                b.law = t.law.clone();
                b.validate()?;
                if t.methods.is_empty() {
                    return Err(Error::InvalidConfig("no bootstrap methods".into()));
                }
                if let Some(r) = &t.reference {
                    let q = t.points.len();
                    if r.len() != q || r.iter().any(|row| row.len() != q) {
                        return Err(Error::InvalidConfig(format!("reference must be {q} x {q}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn rank_estimators(&self) -> Vec<RankEstimator> {
        self.estimators.iter().map(|&kind| RankEstimator { kind, offset: self.offset }).collect()
    }

    pub(crate) fn replicate_stream(&self, i: usize) -> RngStream {
        RngStream::new(self.seed, 0).substream(i as u64)
    }
}

/// One long-format result row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub estimator: String,
    pub k: usize,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub mode: String,
    pub rows: Vec<MetricRow>,
    /// Averaged covariance matrices (bootstrap-table mode only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub covariances: Vec<CovarianceEstimate>,
}

impl StudyResult {
    pub fn get(&self, estimator: &str, k: usize, metric: &str) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.k == k && r.metric == metric)
    }

    /// Long format: `mode,estimator,k,metric,value,stderr`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mode,estimator,k,metric,value,stderr")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", self.mode, r.estimator, r.k, r.metric, r.value, r.stderr)?;
        }
        Ok(w.flush()?)
    }
}

/// Runs the study described by `cfg`. Brown–Resnick `mse` studies read their
/// truth table from `oracle_dir`.
pub fn run_study(cfg: &StudyConfig, oracle_dir: Option<&Path>) -> Result<StudyResult> {
    cfg.validate()?;
    let est = cfg.rank_estimators();
    let refs: Vec<&dyn StudyEstimator> = est.iter().map(|e| e as &dyn StudyEstimator).collect();
    match &cfg.mode {
        StudyMode::Mse { .. } => {
            let table = match (&cfg.model, oracle_dir) {
                (ModelSpec::BrownResnick { .. }, Some(dir)) => Some(load_oracle(dir, cfg)?),
                _ => None,
            };
            integrated_error_study(cfg, &refs, table.as_ref())
        }
        StudyMode::WlsRmse { .. } => wls_rmse_study(cfg, &refs),
        StudyMode::BootstrapTable(_) => bootstrap_comparison_study(cfg),
    }
}

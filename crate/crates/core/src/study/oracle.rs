//! Cached Monte Carlo truth for `mse` studies without a closed-form stdf.
//!
//! The table holds `l(U_i)` for the uniform point of every replicate. It is
//! keyed by a SHA-256 hash of the model, the study seed and the oracle
//! settings. The replication count is not part of the key: replicate `i`
//! always sees the same point, so a longer table serves shorter studies.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{uniform_point, OracleSettings, StudyConfig, StudyMode};
use crate::error::{Error, Result};
use crate::io::{read_json, write_json};
use crate::models::{BrownResnickField, ModelSpec};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleTable {
    pub key: String,
    pub model: ModelSpec,
    pub seed: u64,
    pub settings: OracleSettings,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
}

fn settings(cfg: &StudyConfig) -> Result<OracleSettings> {
    match &cfg.mode {
        StudyMode::Mse { oracle } => Ok(*oracle),
        _ => Err(Error::InvalidConfig("oracle tables belong to mse studies".into())),
    }
}

/// Hex SHA-256 of the fields that determine the table entries.
pub fn oracle_key(cfg: &StudyConfig) -> Result<String> {
    let s = settings(cfg)?;
    let payload = serde_json::to_vec(&(&cfg.model, cfg.seed, s.mc, s.seed))?;
    Ok(hex::encode(Sha256::digest(&payload)))
}

impl OracleTable {
    /// Checks that the table was built for `cfg` and is long enough.
    pub fn check(&self, cfg: &StudyConfig) -> Result<()> {
        if self.key != oracle_key(cfg)? {
            return Err(Error::OracleUnavailable("oracle table was built for a different study".into()));
        }
        if self.values.len() < cfg.replications {
            return Err(Error::OracleUnavailable(format!(
                "oracle table covers {} replicates, study needs {}",
                self.values.len(),
                cfg.replications
            )));
        }
        Ok(())
    }
}

/// Monte Carlo truth at every replicate point from one shared pool of
/// `mc` spectral functions.
pub fn precompute_oracle(cfg: &StudyConfig) -> Result<OracleTable> {
    cfg.validate()?;
    let s = settings(cfg)?;
    let field = BrownResnickField::new(&cfg.model)?;
    log::info!("drawing {} spectral functions", s.mc);
    let pool = field.spectral_pool(s.mc, RngStream::new(s.seed, 0));
    let est: Vec<_> = (0..cfg.replications)
        .into_par_iter()
        .map(|i| pool.stdf(&uniform_point(cfg, i)))
        .collect::<Result<_>>()?;
    Ok(OracleTable {
        key: oracle_key(cfg)?,
        model: cfg.model.clone(),
        seed: cfg.seed,
        settings: s,
        values: est.iter().map(|e| e.estimate).collect(),
        std_errors: est.iter().map(|e| e.std_error).collect(),
    })
}

pub fn oracle_cache_path(dir: &Path, cfg: &StudyConfig) -> Result<PathBuf> {
    Ok(dir.join(format!("{}.json", oracle_key(cfg)?)))
}

pub fn store_oracle(dir: &Path, table: &OracleTable) -> Result<PathBuf> {
    let path = dir.join(format!("{}.json", table.key));
    write_json(&path, table)?;
    Ok(path)
}

pub fn load_oracle(dir: &Path, cfg: &StudyConfig) -> Result<OracleTable> {
    let path = oracle_cache_path(dir, cfg)?;
    if !path.exists() {
        return Err(Error::OracleUnavailable(format!(
            "no oracle table at {}; run `stdf study --precompute-oracle` with the same config first",
            path.display()
        )));
    }
    let table: OracleTable = read_json(&path)?;
    table.check(cfg)?;
    Ok(table)
}

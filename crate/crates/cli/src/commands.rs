//! Subcommand implementations. Each command resolves its flags (or a
//! `--config` file) into a serializable config, runs it, and writes a
//! manifest holding that config next to its outputs.

use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;

use stdf_core::estimators::{evaluate_grid, lower_tail_copula, StdfEstimator};
use stdf_core::fitting::{wls_fit, FitConfig};
use stdf_core::io::{
    create_file, read_data_csv, read_grid_csv, read_table, write_covariance, write_data, write_estimates, write_json,
    write_ranks, HeaderMode,
};
use stdf_core::models::{self, ModelSpec};
use stdf_core::ranks::compute_ranks;
use stdf_core::resampling::{bootstrap_covariance, BootstrapConfig, BootstrapMethod};
use stdf_core::study::{self, oracle_cache_path, precompute_oracle, store_oracle, Preset, StudyConfig, StudyMode};
use stdf_core::{Error, RngStream, StdfConfig, TailFlavor};

use crate::args::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags; exit code 1.
    Usage(String),
    /// Failure while running; exit code 2.
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require<T>(v: Option<T>, flag: &str) -> CliResult<T> {
    v.ok_or_else(|| usage(format!("missing required flag --{flag} (or pass --config)")))
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    tool: String,
    version: String,
    command: String,
    config: Value,
}

fn write_manifest<T: Serialize>(path: &Path, command: &str, config: &T) -> CliResult<()> {
    let m = Manifest {
        tool: "stdf".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        config: serde_json::to_value(config).map_err(Error::from)?,
    };
    write_json(path, &m)?;
    Ok(())
}

fn sidecar(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Reads either a bare config or a manifest written by `command`.
fn load_config<T: DeserializeOwned>(path: &Path, command: &str) -> CliResult<T> {
    let v: Value = stdf_core::io::read_json(path)?;
    let inner = match (v.get("command"), v.get("config")) {
        (Some(c), Some(cfg)) => {
            if c != command {
                return Err(usage(format!("{} is a manifest for `{c}`, not `{command}`", path.display())));
            }
            cfg.clone()
        }
        _ => v,
    };
    Ok(serde_json::from_value(inner).map_err(Error::from)?)
}

fn header_mode(h: Header) -> HeaderMode {
    match h {
        Header::Auto => HeaderMode::Auto,
        Header::Yes => HeaderMode::Yes,
        Header::No => HeaderMode::No,
    }
}

fn estimators(choice: EstimatorChoice) -> Vec<StdfEstimator> {
    match choice {
        EstimatorChoice::Empirical => vec![StdfEstimator::Empirical],
        EstimatorChoice::Beta => vec![StdfEstimator::Beta],
        EstimatorChoice::Both => vec![StdfEstimator::Empirical, StdfEstimator::Beta],
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SimulateConfig {
    model: ModelSpec,
    n: usize,
    seed: u64,
}

pub fn simulate(a: SimulateArgs) -> CliResult<()> {
    let cfg = match &a.config {
        Some(p) => load_config(p, "simulate")?,
        None => {
            let kind = require(a.model, "model")?;
            let one_theta = || match a.theta.as_slice() {
                [t] => Ok(*t),
                _ => Err(usage("--theta takes exactly one value for this model")),
            };
            let model = match kind {
                ModelKind::Logistic => ModelSpec::logistic(one_theta()?)?,
                ModelKind::Clayton => ModelSpec::clayton(one_theta()?)?,
                ModelKind::MaxLinear if a.theta.is_empty() => return Err(usage("--theta is required")),
                ModelKind::MaxLinear => ModelSpec::max_linear_two_factor(&a.theta)?,
                ModelKind::BrownResnick => {
                    ModelSpec::brown_resnick_grid(require(a.rho, "rho")?, require(a.alpha, "alpha")?)?
                }
            };
            SimulateConfig { model, n: require(a.n, "n")?, seed: require(a.seed, "seed")? }
        }
    };
    let data = models::sample(&cfg.model, cfg.n, RngStream::new(cfg.seed, 0))?;
    write_data(create_file(&a.out)?, &data)?;
    write_manifest(&sidecar(&a.out), "simulate", &cfg)
}

#[derive(Debug, Serialize, Deserialize)]
struct RanksConfig {
    input: PathBuf,
    header: HeaderMode,
    jitter_seed: Option<u64>,
}

pub fn ranks(a: RanksArgs) -> CliResult<()> {
    let cfg = match &a.config {
        Some(p) => load_config(p, "ranks")?,
        None => RanksConfig {
            input: require(a.input.input.clone(), "input")?,
            header: header_mode(a.input.header),
            jitter_seed: a.jitter_seed,
        },
    };
    let mut data = read_data_csv(&cfg.input, cfg.header)?;
    if let Some(seed) = cfg.jitter_seed {
        data = data.jitter_ties(RngStream::new(seed, 0));
    }
    write_ranks(create_file(&a.out)?, &compute_ranks(&data)?)?;
    write_manifest(&sidecar(&a.out), "ranks", &cfg)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TargetKind {
    Stdf,
    LowerTail,
}

#[derive(Debug, Serialize, Deserialize)]
struct EstimateConfig {
    input: PathBuf,
    header: HeaderMode,
    grid: PathBuf,
    k: f64,
    offset: f64,
    estimators: Vec<StdfEstimator>,
    target: TargetKind,
}

pub fn estimate(a: EstimateArgs) -> CliResult<()> {
    let cfg = match &a.config {
        Some(p) => load_config(p, "estimate")?,
        None => EstimateConfig {
            input: require(a.input.input.clone(), "input")?,
            header: header_mode(a.input.header),
            grid: require(a.grid.clone(), "grid")?,
            k: require(a.k, "k")?,
            offset: a.offset,
            estimators: estimators(a.estimator),
            target: match a.target {
                Target::Stdf => TargetKind::Stdf,
                Target::LowerTail => TargetKind::LowerTail,
            },
        },
    };
    let r = compute_ranks(&read_data_csv(&cfg.input, cfg.header)?)?;
    let grid = read_grid_csv(&cfg.grid, cfg.header)?;
    let scfg = StdfConfig::new(cfg.k, cfg.offset)?;
    let mut columns = Vec::new();
    for est in &cfg.estimators {
        let vals = match cfg.target {
            TargetKind::Stdf => evaluate_grid(&r, &scfg, *est, &grid)?,
            TargetKind::LowerTail => {
                let flavor = match est {
                    StdfEstimator::Empirical => TailFlavor::Empirical,
                    StdfEstimator::Beta => TailFlavor::Beta,
                };
                grid.points()
                    .iter()
                    .map(|x| lower_tail_copula(&r, &scfg, x, flavor))
                    .collect::<stdf_core::Result<Vec<f64>>>()?
            }
        };
        columns.push((est.label(), vals));
    }
    write_estimates(create_file(&a.out)?, &grid, &columns)?;
    write_manifest(&sidecar(&a.out), "estimate", &cfg)
}

#[derive(Debug, Serialize, Deserialize)]
struct FitRun {
    input: PathBuf,
    header: HeaderMode,
    k: f64,
    estimator: StdfEstimator,
    offset: f64,
    fit: FitConfig,
}

#[derive(Debug, Serialize)]
struct FitOutput<'a> {
    parameters: Vec<&'a str>,
    theta_hat: Vec<f64>,
    objective: f64,
    iterations: usize,
    pilot: Vec<f64>,
}

pub fn fit(a: FitArgs) -> CliResult<()> {
    let cfg: FitRun = match &a.config {
        Some(p) => load_config(p, "fit")?,
        None => {
            let estimator = match a.estimator {
                EstimatorChoice::Empirical => StdfEstimator::Empirical,
                EstimatorChoice::Beta => StdfEstimator::Beta,
                EstimatorChoice::Both => return Err(usage("--estimator must name a single pilot")),
            };
            let mut fit = match a.family {
                Family::Logistic => FitConfig::logistic_default(),
                Family::BrownResnick => FitConfig::brown_resnick_default(),
            };
            if let Some(p) = &a.points {
                fit.points = read_table(std::fs::File::open(p).map_err(Error::from)?, header_mode(a.input.header))?;
            }
            if let Some(p) = &a.weights {
                fit.weights = Some(read_table(std::fs::File::open(p).map_err(Error::from)?, HeaderMode::Auto)?);
            }
            FitRun {
                input: require(a.input.input.clone(), "input")?,
                header: header_mode(a.input.header),
                k: require(a.k, "k")?,
                estimator,
                offset: a.offset,
                fit,
            }
        }
    };
    let r = compute_ranks(&read_data_csv(&cfg.input, cfg.header)?)?;
    let scfg = StdfConfig::new(cfg.k, cfg.offset)?;
    let pilot: Vec<f64> = cfg
        .fit
        .points
        .iter()
        .map(|c| cfg.estimator.evaluate(&r, &scfg, c))
        .collect::<stdf_core::Result<_>>()?;
    let res = wls_fit(&pilot, &cfg.fit)?;
    let out = FitOutput {
        parameters: cfg.fit.family.param_names(), theta_hat: res.theta_hat, objective: res.objective, iterations: res.iterations, pilot };
    write_json(&a.out, &out)?;
    write_manifest(&sidecar(&a.out), "fit", &cfg)
}

#[derive(Debug, Serialize, Deserialize)]
struct BootstrapRun {
    input: PathBuf,
    header: HeaderMode,
    seed: u64,
    bootstrap: BootstrapConfig,
}

pub fn bootstrap(a: BootstrapArgs) -> CliResult<()> {
    let cfg: BootstrapRun = match &a.config {
        Some(p) => load_config(p, "bootstrap")?,
        None => {
            let method = match a.method {
                Method::Beta => BootstrapMethod::Beta,
                Method::Multiplier => BootstrapMethod::Multiplier,
            };
            let (points, labels) = match &a.points {
                Some(p) => (read_table(std::fs::File::open(p).map_err(Error::from)?, HeaderMode::Auto)?, None),
                None => {
                    let (p, l) = BootstrapConfig::unit_circle_points();
                    (p, Some(l))
                }
            };
            let mut b = BootstrapConfig::new(method, require(a.k, "k")?, points, require(a.replications, "replications")?);
            b.labels = labels;
            BootstrapRun {
                input: require(a.input.input.clone(), "input")?,
                header: header_mode(a.input.header),
                seed: require(a.seed, "seed")?,
                bootstrap: b,
            }
        }
    };
    let r = compute_ranks(&read_data_csv(&cfg.input, cfg.header)?)?;
    let est = bootstrap_covariance(&r, &cfg.bootstrap, RngStream::new(cfg.seed, 0))?;
    if a.out.extension().is_some_and(|e| e == "json") {
        write_json(&a.out, &est)?;
    } else {
        write_covariance(create_file(&a.out)?, &est)?;
    }
    write_manifest(&sidecar(&a.out), "bootstrap", &cfg)
}

pub fn study(a: StudyArgs) -> CliResult<()> {
    let mut cfg: StudyConfig = match (&a.config, &a.design) {
        (Some(p), _) => load_config(p, "study")?,
        (None, Some(name)) => StudyConfig::design(name)?,
        (None, None) => return Err(usage("study needs --config or --design")),
    };
    if let Some(p) = a.preset {
        cfg = cfg.with_preset(match p {
            PresetArg::Paper => Preset::Paper,
            PresetArg::Desk => Preset::Desk,
        });
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    if a.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg).map_err(Error::from)?);
        return Ok(());
    }
    let out = a.out.expect("clap requires --out");
    std::fs::create_dir_all(&out).map_err(Error::from)?;
    let oracle_dir = a.oracle_cache.clone().unwrap_or_else(|| out.join("oracle"));
    let needs_oracle = matches!(cfg.mode, StudyMode::Mse { .. })
        && matches!(cfg.model, ModelSpec::BrownResnick { .. })
        && cfg.model.dim() > 2;
    if needs_oracle && a.precompute_oracle {
        let path = oracle_cache_path(&oracle_dir, &cfg)?;
        let stale = match stdf_core::study::load_oracle(&oracle_dir, &cfg) {
            Ok(_) => false,
            Err(Error::OracleUnavailable(_)) => true,
            Err(e) => return Err(e.into()),
        };
        if stale {
            log::info!("computing oracle table {}", path.display());
            store_oracle(&oracle_dir, &precompute_oracle(&cfg)?)?;
        }
    }
    let res = study::run_study(&cfg, needs_oracle.then_some(oracle_dir.as_path()))?;
    res.write_csv(create_file(&out.join("results.csv"))?)?;
    write_json(&out.join("results.json"), &res)?;
    for (i, cov) in res.covariances.iter().enumerate() {
        let k = cfg.k_values[i / (res.covariances.len() / cfg.k_values.len()).max(1)];
        let name = format!("covariance_{}_k{k}.csv", cov.method.label());
        write_covariance(create_file(&out.join(name))?, cov)?;
    }
    write_manifest(&out.join("manifest.json"), "study", &cfg)
}

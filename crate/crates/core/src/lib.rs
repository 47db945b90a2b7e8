//! Nonparametric estimation of the stable tail dependence function.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: order-statistic (beta) CDFs, binomial probabilities, normal CDF.
//! - [`ranks`]: data matrices and their within-column rank matrices.
//! - [`estimators`]: empirical copula, empirical beta copula, the empirical and
//!   empirical beta stdf, tail copulas and the exact binomial-mixture oracle.
//! - [`models`]: logistic, max-linear, Brown–Resnick and Clayton samplers with
//!   their true dependence functions.
//! - [`fitting`]: weighted least squares fits of parametric stdf families.
//! - [`resampling`]: the beta-copula resampler and the direct multiplier bootstrap.
//! - [`study`]: the Monte Carlo harness (integrated errors, WLS RMSE, bootstrap tables).
//!
//! Every estimator is a function of ranks only, so all samplers are free to emit
//! whatever continuous margins are convenient.

pub mod error;
pub mod estimators;
pub mod fitting;
pub mod io;
pub mod models;
pub mod numerics;
pub mod ranks;
pub mod resampling;
pub mod rng;
pub mod stats;
pub mod study;

pub use error::{Error, Result};
pub use estimators::{EvalGrid, StdfConfig, TailFlavor};
pub use models::ModelSpec;
pub use ranks::{DataMatrix, RankMatrix};
pub use rng::RngStream;

use proptest::prelude::*;

use stdf_core::estimators::{empirical_beta_stdf, empirical_stdf};
use stdf_core::fitting::{objective, wls_fit, FitConfig};
use stdf_core::numerics::{beta_order_statistic_cdf, OrderStatParams};
use stdf_core::ranks::compute_ranks;
use stdf_core::resampling::{bootstrap_covariance, BootstrapConfig, BootstrapMethod};
use stdf_core::stats::min_eigenvalue;
use stdf_core::study::{run_study, StudyConfig};
use stdf_core::{DataMatrix, ModelSpec, RankMatrix, RngStream, StdfConfig};

fn ranks_from(values: &[f64], d: usize) -> RankMatrix {
    let rows: Vec<Vec<f64>> = values.chunks(d).map(<[f64]>::to_vec).collect();
    compute_ranks(&DataMatrix::from_rows(&rows).unwrap()).unwrap()
}

fn cdf(n: u64, r: u64, u: f64) -> f64 {
    beta_order_statistic_cdf(OrderStatParams::new(n, r).unwrap(), u).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn order_stat_cdf_monotone(n in 1u64..400, r_frac in 0.0f64..1.0, u in 0.0f64..1.0, du in 0.0f64..0.2) {
        let r = 1 + ((n - 1) as f64 * r_frac) as u64;
        let v = (u + du).min(1.0);
        prop_assert!(cdf(n, r, u) <= cdf(n, r, v) + 1e-15);
        if r < n {
            prop_assert!(cdf(n, r, u) + 1e-15 >= cdf(n, r + 1, u));
        }
    }

    #[test]
    fn rank_columns_sum_to_triangle(values in prop::collection::hash_set(-1_000_000i64..1_000_000, 6..60)) {
        let values: Vec<f64> = values.into_iter().map(|v| v as f64 * 0.37).collect();
        let d = 3;
        let n = values.len() / d;
        prop_assume!(n >= 1);
        let r = ranks_from(&values[..n * d], d);
        for j in 0..d {
            let s: u64 = (0..n).map(|i| r.get(i, j) as u64).sum();
            prop_assert_eq!(s, (n * (n + 1) / 2) as u64);
        }
    }

    #[test]
    fn beta_stdf_bounds_and_margins(seed in any::<u64>(), n in 2usize..150, d in 1usize..5,
                                    k_frac in 0.01f64..1.0, x in prop::collection::vec(0.0f64..1.0, 4)) {
        let data = stdf_core::models::sample(&ModelSpec::logistic(0.6).unwrap(), n, RngStream::new(seed, 0)).unwrap();
        let base = compute_ranks(&data).unwrap();
        // Stack shifted copies of the bivariate ranks to reach `d` columns.
        let rows: Vec<Vec<u32>> = (0..n)
            .map(|i| (0..d).map(|j| base.get((i + j / 2) % n, j % 2)).collect())
            .collect();
        let r = RankMatrix::from_rows(&rows).unwrap();
        let k = (k_frac * n as f64).max(1.0);
        let x: Vec<f64> = x[..d].iter().map(|v| v * n as f64 / k).collect();
        let cfg = StdfConfig::new(k, 0.5).unwrap();
        let l = empirical_beta_stdf(&r, &cfg, &x).unwrap();
        let max = x.iter().cloned().fold(0.0, f64::max);
        let sum: f64 = x.iter().sum();
        let tol = 1e-12 * (1.0 + sum);
        prop_assert!(max - tol <= l && l <= sum + tol, "{max} {l} {sum}");
        for j in 0..d {
            let mut axis = vec![0.0; d];
            axis[j] = x[j];
            prop_assert!((empirical_beta_stdf(&r, &cfg, &axis).unwrap() - x[j]).abs() <= tol);
        }
        let e = empirical_stdf(&r, &cfg, &x).unwrap();
        prop_assert!(e <= n as f64 / k + 1e-12);
    }

    #[test]
    fn logistic_fit_is_local_minimum(pilot in prop::collection::vec(0.5f64..1.0, 4)) {
        let cfg = FitConfig::logistic_default();
        let fit = wls_fit(&pilot, &cfg).unwrap();
        let theta = fit.theta_hat[0];
        let f = objective(&pilot, &cfg, &[theta]).unwrap();
        let [lo, hi] = cfg.bounds()[0];
        for h in [-1e-4, 1e-4] {
            let t = theta + h;
            if (lo..=hi).contains(&t) {
                let g = objective(&pilot, &cfg, &[t]).unwrap();
                prop_assert!(f <= g + 1e-15, "theta {theta} f {f} g {g} h {h}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bootstrap_covariance_symmetric_psd(seed in any::<u64>(), multiplier in any::<bool>(), n in 30usize..200) {
        let data = stdf_core::models::sample(&ModelSpec::clayton(0.5).unwrap(), n, RngStream::new(seed, 1)).unwrap();
        let r = compute_ranks(&data).unwrap();
        let (points, _) = BootstrapConfig::unit_circle_points();
        let method = if multiplier { BootstrapMethod::Multiplier } else { BootstrapMethod::Beta };
        let cfg = BootstrapConfig::new(method, (n / 5) as f64, points, 30);
        let est = bootstrap_covariance(&r, &cfg, RngStream::new(seed, 2)).unwrap();
        let flat: Vec<f64> = est.matrix.iter().flatten().copied().collect();
        for a in 0..3 {
            for b in 0..3 {
                prop_assert!((est.matrix[a][b] - est.matrix[b][a]).abs() <= 1e-12);
            }
        }
        prop_assert!(min_eigenvalue(&flat, 3) >= -1e-10);
    }
}

#[test]
fn doubling_replications_halves_squared_se() {
    let mut cfg: StudyConfig = serde_json::from_str(
        r#"{"mode":"mse","model":{"model":"logistic","theta":0.7},"n":300,"replications":1000,"seed":3,"k_values":[30]}"#,
    )
    .unwrap();
    let small = run_study(&cfg, None).unwrap();
    cfg.replications = 2000;
    let large = run_study(&cfg, None).unwrap();
    for est in ["empirical", "beta"] {
        let a = small.get(est, 30, "mse").unwrap().stderr;
        let b = large.get(est, 30, "mse").unwrap().stderr;
        let ratio = (a * a) / (b * b);
        assert!((1.5..=2.5).contains(&ratio), "{est}: {ratio}");
    }
}

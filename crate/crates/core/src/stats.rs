//! Small deterministic reductions shared by the resampling and study code.

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

pub fn mean_se(xs: &[f64]) -> MeanSe {
    let n = xs.len();
    if n == 0 {
        return MeanSe { mean: f64::NAN, se: f64::NAN };
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return MeanSe { mean, se: f64::NAN };
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    MeanSe { mean, se: (var / n as f64).sqrt() }
}

/// Sample covariance (divisor `B - 1`) of `b` replicate rows of length `q`,
/// stored row-major. Returned row-major `q x q`, exactly symmetric.
pub fn sample_covariance(rows: &[f64], b: usize, q: usize) -> Vec<f64> {
    assert_eq!(rows.len(), b * q);
    assert!(b >= 2, "sample covariance needs at least two replicates");
    // Shift by the first replicate: identical replicates give exact zeros.
    let shifted: Vec<f64> = rows.iter().enumerate().map(|(i, v)| v - rows[i % q]).collect();
    let means: Vec<f64> = (0..q)
        .map(|c| pairwise_sum(&(0..b).map(|r| shifted[r * q + c]).collect::<Vec<_>>()) / b as f64)
        .collect();
    let mut cov = vec![0.0; q * q];
    for a in 0..q {
        for c in a..q {
            let prods: Vec<f64> = (0..b)
                .map(|r| (shifted[r * q + a] - means[a]) * (shifted[r * q + c] - means[c]))
                .collect();
            let v = pairwise_sum(&prods) / (b - 1) as f64;
            cov[a * q + c] = v;
            cov[c * q + a] = v;
        }
    }
    cov
}

/// Smallest eigenvalue of a small symmetric matrix by cyclic Jacobi sweeps.
pub fn min_eigenvalue(m: &[f64], q: usize) -> f64 {
    let mut a = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..q)
            .flat_map(|i| (0..q).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * q + j] * a[i * q + j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..q {
            for r in p + 1..q {
                let apr = a[p * q + r];
                if apr.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[r * q + r] - a[p * q + p]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..q {
                    let akp = a[k * q + p];
                    let akr = a[k * q + r];
                    a[k * q + p] = c * akp - s * akr;
                    a[k * q + r] = s * akp + c * akr;
                }
                for k in 0..q {
                    let apk = a[p * q + k];
                    let ark = a[r * q + k];
                    a[p * q + k] = c * apk - s * ark;
                    a[r * q + k] = s * apk + c * ark;
                }
            }
        }
    }
    (0..q).map(|i| a[i * q + i]).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_variance() {
        let cov = sample_covariance(&[-1.0, 1.0], 2, 1);
        assert_eq!(cov, vec![2.0]);
        let same = sample_covariance(&[0.3, 0.1, 0.3, 0.1, 0.3, 0.1], 3, 2);
        assert!(same.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eigen_of_known_matrix() {
        // eigenvalues 1 and 3
        let m = [2.0, 1.0, 1.0, 2.0];
        assert!((min_eigenvalue(&m, 2) - 1.0).abs() < 1e-12);
        let diag = [0.5, 0.0, 0.0, 0.0, -0.2, 0.0, 0.0, 0.0, 4.0];
        assert!((min_eigenvalue(&diag, 3) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn mean_se_basic() {
        let m = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let big: Vec<f64> = (0..1000).map(|i| i as f64 * 0.1).collect();
        assert!((pairwise_sum(&big) - 49_950.0).abs() < 1e-9);
    }
}

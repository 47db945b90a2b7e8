//! Data matrices and within-column ranks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::RngStream;

/// `n` observations of `d` variables, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(domain(format!("data matrix needs n >= 2 and d >= 1, got {n}x{d}")));
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: values.len() });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(domain(format!("non-finite data value {v}")));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// Breaks ties by adding seeded uniform noise.
    ///
    /// Within each column the noise for every entry is drawn from
    /// `(-h/2, h/2)` where `h` is the smallest positive gap between distinct
    /// values of that column, so distinct values keep their order and only
    /// tied groups are permuted at random. Never applied implicitly.
    pub fn jitter_ties(&self, stream: RngStream) -> DataMatrix {
        let mut rng = stream.rng();
        let mut values = self.values.clone();
        for j in 0..self.d {
            let mut col = self.column(j);
            col.sort_by(f64::total_cmp);
            let gap = col
                .windows(2)
                .map(|w| w[1] - w[0])
                .filter(|g| *g > 0.0)
                .fold(f64::INFINITY, f64::min);
            let h = if gap.is_finite() { gap } else { 1.0 };
            for i in 0..self.n {
                let u: f64 = rng.random();
                values[i * self.d + j] += h * (u - 0.5) * 0.999;
            }
        }
        DataMatrix { n: self.n, d: self.d, values }
    }
}

/// Within-column ranks `R_ij = #{t : X_tj <= X_ij}`; every column is a
/// permutation of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankMatrix {
    n: usize,
    d: usize,
    ranks: Vec<u32>,
}

impl RankMatrix {
    /// Validates that every column is a permutation of `1..=n`.
    pub fn new(n: usize, d: usize, ranks: Vec<u32>) -> Result<Self> {
        if n < 1 || d < 1 {
            return Err(domain(format!("rank matrix needs n >= 1 and d >= 1, got {n}x{d}")));
        }
        if ranks.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: ranks.len() });
        }
        let mut seen = vec![false; n];
        for j in 0..d {
            seen.fill(false);
            for i in 0..n {
                let r = ranks[i * d + j] as usize;
                if r < 1 || r > n || seen[r - 1] {
                    return Err(domain(format!("column {j} is not a permutation of 1..={n}")));
                }
                seen[r - 1] = true;
            }
        }
        Ok(Self { n, d, ranks })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub(crate) fn from_raw(n: usize, d: usize, ranks: Vec<u32>) -> Self {
        debug_assert_eq!(ranks.len(), n * d);
        Self { n, d, ranks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.ranks[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.ranks[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.ranks.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.ranks
    }

    /// The ranks viewed as data, for routines defined on raw observations.
    pub fn to_data(&self) -> DataMatrix {
        DataMatrix {
            n: self.n,
            d: self.d,
            values: self.ranks.iter().map(|&r| r as f64).collect(),
        }
    }

    /// Row indices sorted by increasing rank in column `j`.
    pub fn order(&self, j: usize) -> Vec<usize> {
        let mut order = vec![0; self.n];
        for i in 0..self.n {
            order[self.get(i, j) as usize - 1] = i;
        }
        order
    }
}

/// Ranks each column of `data`; ties are an error.
pub fn compute_ranks(data: &DataMatrix) -> Result<RankMatrix> {
    rank_values(data.n, data.d, &data.values)
}

/// Ranks a row-major `n x d` buffer. `O(n log n)` per column.
pub(crate) fn rank_values(n: usize, d: usize, values: &[f64]) -> Result<RankMatrix> {
    let mut ranks = vec![0u32; n * d];
    let mut idx: Vec<usize> = Vec::with_capacity(n);
    for j in 0..d {
        idx.clear();
        idx.extend(0..n);
        idx.sort_unstable_by(|&a, &b| values[a * d + j].total_cmp(&values[b * d + j]));
        for w in idx.windows(2) {
            let a = values[w[0] * d + j];
            if a == values[w[1] * d + j] {
                return Err(Error::TiesDetected { column: j, value: a });
            }
        }
        for (pos, &i) in idx.iter().enumerate() {
            ranks[i * d + j] = (pos + 1) as u32;
        }
    }
    Ok(RankMatrix::from_raw(n, d, ranks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn col(values: &[f64]) -> Vec<u32> {
        let data = DataMatrix::new(values.len(), 1, values.to_vec()).unwrap();
        compute_ranks(&data).unwrap().as_slice().to_vec()
    }

    #[test]
    fn ranks_examples() {
        assert_eq!(col(&[3.1, 1.2, 2.7]), vec![3, 1, 2]);
        assert_eq!(col(&[1.0, 2.0, 3.0]), vec![1, 2, 3]);
    }

    #[test]
    fn ties_are_rejected() {
        let data = DataMatrix::new(2, 1, vec![5.0, 5.0]).unwrap();
        match compute_ranks(&data) {
            Err(Error::TiesDetected { column, value }) => {
                assert_eq!(column, 0);
                assert_eq!(value, 5.0);
            }
            other => panic!("expected ties error, got {other:?}"),
        }
    }

    #[test]
    fn data_matrix_validation() {
        assert!(DataMatrix::new(1, 1, vec![1.0]).is_err());
        assert!(DataMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(DataMatrix::new(2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(RankMatrix::new(2, 1, vec![1, 1]).is_err());
        assert!(RankMatrix::new(2, 1, vec![0, 1]).is_err());
        assert!(RankMatrix::new(1, 3, vec![1, 1, 1]).is_ok());
    }

    #[test]
    fn jitter_breaks_ties_and_keeps_order() {
        let data = DataMatrix::new(5, 1, vec![1.0, 2.0, 2.0, 3.0, 2.0]).unwrap();
        let j = data.jitter_ties(RngStream::new(1, 0));
        let r = compute_ranks(&j).unwrap();
        assert_eq!(r.get(0, 0), 1);
        assert_eq!(r.get(3, 0), 5);
        assert_eq!(j, data.jitter_ties(RngStream::new(1, 0)));
    }

    proptest! {
        #[test]
        fn invariant_under_increasing_maps(
            raw in prop::collection::hash_set(-1_000_000i64..1_000_000, 2..60),
            d in 1usize..4,
        ) {
            let base: Vec<f64> = raw.into_iter().map(|v| v as f64 / 1000.0).collect();
            let n = base.len();
            // Rotate per column so the columns differ.
            let values: Vec<f64> = (0..n)
                .flat_map(|i| (0..d).map(move |j| (i, j)))
                .map(|(i, j)| base[(i + 3 * j) % n])
                .collect();
            let data = DataMatrix::new(n, d, values.clone()).unwrap();
            let r = compute_ranks(&data).unwrap();
            for map in [|v: f64| (v / 1000.0).exp(), |v: f64| v * v * v, |v: f64| 2.5 * v - 7.0] {
                let mapped = DataMatrix::new(n, d, values.iter().map(|&v| map(v)).collect()).unwrap();
                prop_assert_eq!(&compute_ranks(&mapped).unwrap(), &r);
            }
            for j in 0..d {
                let s: u64 = (0..n).map(|i| r.get(i, j) as u64).sum();
                prop_assert_eq!(s, (n * (n + 1) / 2) as u64);
            }
        }
    }
}

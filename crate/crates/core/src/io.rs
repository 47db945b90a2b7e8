//! CSV and JSON input/output.
//!
//! Output CSV always has a header row, comma separators and LF line endings.
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::estimators::EvalGrid;
use crate::ranks::{DataMatrix, RankMatrix};
use crate::resampling::CovarianceEstimate;

/// Whether the first CSV row holds column names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeaderMode {
    /// Header iff some field of the first row is not a number.
    #[default]
    Auto,
    Yes,
    No,
}

/// Parses a numeric CSV table into rows.
pub fn read_table<R: Read>(reader: R, header: HeaderMode) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let skip = match header {
            HeaderMode::Yes => line == 0,
            HeaderMode::No => false,
            HeaderMode::Auto => line == 0 && parsed.is_err(),
        };
        if skip {
            continue;
        }
        let row = parsed.map_err(|e| domain(format!("line {}: {e}", line + 1)))?;
        if let Some(first) = rows.first() {
            let first: &Vec<f64> = first;
            if row.len() != first.len() {
                return Err(Error::DimensionMismatch { expected: first.len(), got: row.len() });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_data_csv(path: &Path, header: HeaderMode) -> Result<DataMatrix> {
    DataMatrix::from_rows(&read_table(File::open(path)?, header)?)
}

/// Reads a rank table; every column must be a permutation of `1..=n`.
pub fn read_rank_csv(path: &Path, header: HeaderMode) -> Result<RankMatrix> {
    let rows = read_table(File::open(path)?, header)?;
    let ranks: Vec<Vec<u32>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&v| {
                    if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
                        Err(domain(format!("rank {v} is not a positive integer")))
                    } else {
                        Ok(v as u32)
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    RankMatrix::from_rows(&ranks)
}

pub fn read_grid_csv(path: &Path, header: HeaderMode) -> Result<EvalGrid> {
    EvalGrid::new(read_table(File::open(path)?, header)?)
}

fn join<T: ToString>(vals: impl IntoIterator<Item = T>) -> String {
    vals.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn column_names(prefix: &str, d: usize) -> String {
    join((1..=d).map(|j| format!("{prefix}{j}")))
}

pub fn write_data<W: Write>(mut w: W, data: &DataMatrix) -> Result<()> {
    writeln!(w, "{}", column_names("x", data.d()))?;
    for row in data.rows() {
        writeln!(w, "{}", join(row))?;
    }
    Ok(w.flush()?)
}

pub fn write_ranks<W: Write>(mut w: W, r: &RankMatrix) -> Result<()> {
    writeln!(w, "{}", column_names("r", r.d()))?;
    for row in r.rows() {
        writeln!(w, "{}", join(row))?;
    }
    Ok(w.flush()?)
}

/// Long format: grid coordinates, estimator label and estimate, one row per
/// estimator and point.
pub fn write_estimates<W: Write>(mut w: W, grid: &EvalGrid, columns: &[(&str, Vec<f64>)]) -> Result<()> {
    writeln!(w, "{},estimator,estimate", column_names("x", grid.dim()))?;
    for (name, vals) in columns {
        if vals.len() != grid.points().len() {
            return Err(Error::DimensionMismatch { expected: grid.points().len(), got: vals.len() });
        }
        for (x, v) in grid.points().iter().zip(vals) {
            writeln!(w, "{},{name},{v}", join(x))?;
        }
    }
    Ok(w.flush()?)
}

/// Covariance matrix with point labels as header and first column.
pub fn write_covariance<W: Write>(mut w: W, est: &CovarianceEstimate) -> Result<()> {
    writeln!(w, "point,{}", est.labels.join(","))?;
    for (label, row) in est.labels.iter().zip(&est.matrix) {
        writeln!(w, "{label},{}", join(row))?;
    }
    Ok(w.flush()?)
}

/// Buffered file writer, creating parent directories as needed.
pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create_file(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(w.flush()?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(std::io::BufReader::new(File::open(path)?))?)
}

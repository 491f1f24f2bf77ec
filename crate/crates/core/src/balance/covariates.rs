use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense `n x d` covariate matrix, one row per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateMatrix {
    values: DMatrix<f64>,
}

impl CovariateMatrix {
    pub const MIN_UNITS: usize = 4;

    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, d) = values.shape();
        if n < Self::MIN_UNITS {
            return Err(Error::InvalidInput(format!(
                "need at least {} units, got {n}",
                Self::MIN_UNITS
            )));
        }
        if d == 0 {
            return Err(Error::InvalidInput("need at least one covariate".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite covariate at row {}, column {}",
                pos % n,
                pos / n
            )));
        }
        Ok(Self { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidInput(format!(
                "row {i} has {} values, expected {d}",
                rows[i].len()
            )));
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.values
    }

    pub fn sample_covariance(&self) -> DMatrix<f64> {
        sample_covariance(&self.values)
    }
}

/// Sample covariance with divisor `n - 1`, centered at the column means.
///
/// Panics if `x` has fewer than two rows.
pub fn sample_covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    assert!(n >= 2, "sample covariance needs at least two rows");
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
    let mut s = centered.tr_mul(&centered) / (n as f64 - 1.0);
    // Exact symmetry; the product is symmetric up to rounding only.
    let s_t = s.transpose();
    s += s_t;
    s *= 0.5;
    s
}

/// Reads a covariate CSV: one unit per line, `d` numeric fields per line.
///
/// Decimal points are always `.`; NaN and infinite tokens are rejected.
pub fn read_covariates<R: Read>(reader: R, has_header: bool) -> Result<CovariateMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(None)
        .from_reader(reader);

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    line,
                    column: record.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", record.len()),
                });
            }
            Some(_) => {}
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                column: j + 1,
                message: format!("not a number: {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: j + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: 1,
            column: 0,
            message: "no data rows".into(),
        });
    }
    CovariateMatrix::from_rows(&rows)
}

pub fn read_covariates_path(path: impl AsRef<Path>, has_header: bool) -> Result<CovariateMatrix> {
    let file = std::fs::File::open(path)?;
    read_covariates(std::io::BufReader::new(file), has_header)
}

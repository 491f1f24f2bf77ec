use std::io::Write;

use serde::Serialize;

use crate::samplers::MethodId;

/// Results columns in output order; `delta` and `eta` only appear in
/// sensitivity reports.
pub const CSV_COLUMNS: [&str; 14] = [
    "method",
    "d",
    "delta",
    "eta",
    "mean_time_s",
    "time_ci_lo",
    "time_ci_hi",
    "bias",
    "sd_tau",
    "coverage",
    "power",
    "r_squared",
    "var_ratio",
    "censored_reps",
];

/// One `(method, d [, delta, eta])` cell. Statistics that a study does not
/// produce are `None`. Aggregates exclude censored replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub method: MethodId,
    pub d: usize,
    pub delta: Option<f64>,
    pub eta: Option<f64>,
    pub completed_reps: usize,
    pub censored_reps: usize,
    pub mean_time_s: Option<f64>,
    pub time_ci_lo: Option<f64>,
    pub time_ci_hi: Option<f64>,
    pub bias: Option<f64>,
    pub sd_tau: Option<f64>,
    pub coverage: Option<f64>,
    pub power: Option<f64>,
    pub r_squared: Option<f64>,
    pub var_ratio: Option<f64>,
    /// Raw per-replication values kept for downstream checks; not written
    /// to CSV.
    #[serde(skip)]
    pub samples: CellSamples,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CellSamples {
    pub times_s: Vec<f64>,
    pub tau_hats: Vec<f64>,
    pub m_values: Vec<f64>,
    pub iterations: Vec<u64>,
}

impl CellReport {
    pub fn new(method: MethodId, d: usize) -> Self {
        Self {
            method,
            d,
            delta: None,
            eta: None,
            completed_reps: 0,
            censored_reps: 0,
            mean_time_s: None,
            time_ci_lo: None,
            time_ci_hi: None,
            bias: None,
            sd_tau: None,
            coverage: None,
            power: None,
            r_squared: None,
            var_ratio: None,
            samples: CellSamples::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub study: &'static str,
    /// Whether `delta` and `eta` columns are written.
    pub with_params: bool,
    pub cells: Vec<CellReport>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn columns(&self) -> Vec<&'static str> {
        CSV_COLUMNS
            .iter()
            .copied()
            .filter(|c| self.with_params || (*c != "delta" && *c != "eta"))
            .collect()
    }

    pub fn cell(&self, method: MethodId, d: usize) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.method == method && c.d == d)
    }

    pub fn total_censored(&self) -> usize {
        self.cells.iter().map(|c| c.censored_reps).sum()
    }

    /// Writes the header and one row per cell. Floats use the shortest
    /// representation that round-trips.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.columns().join(","))?;
        for c in &self.cells {
            let mut row = vec![c.method.to_string(), c.d.to_string()];
            if self.with_params {
                row.push(opt(c.delta));
                row.push(opt(c.eta));
            }
            row.extend(
                [
                    c.mean_time_s,
                    c.time_ci_lo,
                    c.time_ci_hi,
                    c.bias,
                    c.sd_tau,
                    c.coverage,
                    c.power,
                    c.r_squared,
                    c.var_ratio,
                ]
                .into_iter()
                .map(opt),
            );
            row.push(c.censored_reps.to_string());
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

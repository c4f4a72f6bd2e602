//! Result records and their CSV/JSON encodings.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{OutputFormat, RunConfig};

pub const SCHEMA_VERSION: &str = "1";

/// Output of one trajectory; `values` aligns with [`ResultRecord::columns`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOutput {
    pub cell: usize,
    pub trajectory: usize,
    pub seed: u64,
    pub values: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub column: String,
    pub mean: Option<f64>,
    /// Sample standard deviation; zero for fewer than two values.
    pub std: Option<f64>,
    pub count: usize,
}

/// One parameter setting, e.g. a rung of a rate ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub parameters: BTreeMap<String, f64>,
    pub aggregates: Vec<Aggregate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub started_unix_ms: u128,
    pub elapsed_seconds: f64,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: String,
    pub experiment: String,
    pub fingerprint: String,
    pub tool_version: String,
    pub columns: Vec<String>,
    pub cells: Vec<Cell>,
    pub trajectories: Vec<TrajectoryOutput>,
    /// Run-level constants such as the solved inverse temperature.
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    pub metadata: Metadata,
}

pub fn fingerprint(config: &RunConfig) -> String {
    let digest = Sha256::digest(config.canonical_json().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn aggregate(column: &str, values: impl Iterator<Item = f64>) -> Aggregate {
    let xs: Vec<f64> = values.collect();
    let count = xs.len();
    if count == 0 {
        return Aggregate {
            column: column.to_string(),
            mean: None,
            std: None,
            count,
        };
    }
    let mean = xs.iter().sum::<f64>() / count as f64;
    let std = if count > 1 {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Aggregate {
        column: column.to_string(),
        mean: Some(mean),
        std: Some(std),
        count,
    }
}

impl ResultRecord {
    /// Recomputes each cell's aggregates from the trajectory outputs.
    pub fn compute_aggregates(columns: &[String], n_cells: usize, trajectories: &[TrajectoryOutput]) -> Vec<Vec<Aggregate>> {
        (0..n_cells)
            .map(|cell| {
                columns
                    .iter()
                    .enumerate()
                    .map(|(k, name)| {
                        aggregate(
                            name,
                            trajectories
                                .iter()
                                .filter(|t| t.cell == cell && t.error.is_none())
                                .filter_map(|t| t.values.get(k).copied().flatten()),
                        )
                    })
                    .collect()
            })
            .collect()
    }

    /// Whether the stored aggregates follow from the trajectory outputs.
    pub fn check_consistency(&self) -> Result<(), String> {
        let fresh = Self::compute_aggregates(&self.columns, self.cells.len(), &self.trajectories);
        for (cell, recomputed) in self.cells.iter().zip(fresh) {
            for (stored, again) in cell.aggregates.iter().zip(recomputed) {
                let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
                    (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0),
                    (a, b) => a == b,
                };
                if stored.count != again.count || !close(stored.mean, again.mean) || !close(stored.std, again.std) {
                    return Err(format!("aggregate `{}` of cell `{}` does not match its trajectories", stored.column, cell.label));
                }
            }
        }
        if let Some(t) = self.trajectories.iter().find(|t| t.values.len() != self.columns.len() && t.error.is_none()) {
            return Err(format!("trajectory {} has {} values for {} columns", t.trajectory, t.values.len(), self.columns.len()));
        }
        Ok(())
    }

    /// The record without wall-clock metadata; identical for identical runs.
    pub fn payload(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("record serializes");
        value.as_object_mut().expect("record is an object").remove("metadata");
        value
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Header plus one row per trajectory; floats carry 17 significant digits.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["fingerprint", "cell", "trajectory", "seed"];
        header.extend(self.columns.iter().map(String::as_str));
        header.push("error");
        w.write_record(&header).expect("in-memory write");
        for t in &self.trajectories {
            let mut row = vec![
                self.fingerprint.clone(),
                self.cells.get(t.cell).map_or_else(|| t.cell.to_string(), |c| c.label.clone()),
                t.trajectory.to_string(),
                t.seed.to_string(),
            ];
            row.extend((0..self.columns.len()).map(|k| match t.values.get(k).copied().flatten() {
                Some(v) => format_float(v),
                None => String::new(),
            }));
            row.push(t.error.clone().unwrap_or_default());
            w.write_record(&row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn emit(&self, format: OutputFormat, path: Option<&Path>) -> std::io::Result<()> {
        self.check_consistency().map_err(std::io::Error::other)?;
        let bytes = match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => {
                let mut text = self.to_json();
                text.push('\n');
                text.into_bytes()
            }
        };
        match path {
            Some(p) => std::fs::write(p, bytes),
            None => std::io::stdout().lock().write_all(&bytes),
        }
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

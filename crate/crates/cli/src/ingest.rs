//! CSV ingestion with per-column min-max scaling into [-1, 1].

use std::path::Path;

use maskdp::mechanisms::DataMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Affine map of one column: `scaled = (x − offset) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub offset: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
    pub columns: Vec<ColumnScaling>,
}

impl ScalingRecord {
    /// Fits the map for row-major `values` with `p` columns. Constant
    /// columns get offset = value and scale = 1, so they map to 0.
    pub fn fit(values: &[f64], p: usize) -> Self {
        let columns = (0..p)
            .map(|j| {
                let col = values.iter().skip(j).step_by(p);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
                if hi > lo {
                    ColumnScaling {
                        offset: 0.5 * (hi + lo),
                        scale: 0.5 * (hi - lo),
                    }
                } else {
                    ColumnScaling {
                        offset: lo,
                        scale: 1.0,
                    }
                }
            })
            .collect();
        ScalingRecord {
            names: None,
            columns,
        }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let p = self.columns.len();
        values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = self.columns[i % p];
                // clamp roundoff at the column extremes
                ((x - c.offset) / c.scale).clamp(-1.0, 1.0)
            })
            .collect()
    }

    pub fn invert(&self, scaled: &[f64]) -> Vec<f64> {
        let p = self.columns.len();
        scaled
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let c = self.columns[i % p];
                y * c.scale + c.offset
            })
            .collect()
    }
}

/// A parsed, scaled data set.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: DataMatrix,
    pub scaling: ScalingRecord,
    pub header: Option<Vec<String>>,
}

/// Parses rectangular numeric CSV text and scales every column into [-1, 1].
pub fn ingest_str(text: &str, has_header: bool) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = if has_header {
        let h = reader
            .headers()
            .map_err(|e| CliError::Input(format!("cannot read CSV header: {e}")))?;
        Some(h.iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };
    let mut values = Vec::new();
    let mut p = header.as_ref().map_or(0, Vec::len);
    let mut n = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        let line = record.position().map_or(i as u64 + 1, |pos| pos.line());
        if p == 0 {
            p = record.len();
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                CliError::Input(format!(
                    "non-numeric cell {cell:?} at line {line}, column {}",
                    j + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Input(format!(
                    "non-finite cell at line {line}, column {}",
                    j + 1
                )));
            }
            values.push(v);
        }
        n += 1;
    }
    if n == 0 || p == 0 {
        return Err(CliError::Input("input contains no data rows".into()));
    }
    let mut scaling = ScalingRecord::fit(&values, p);
    scaling.names = header.clone();
    let data = DataMatrix::new(n, p, scaling.apply(&values))?;
    Ok(Ingested {
        data,
        scaling,
        header,
    })
}

pub fn ingest(path: &Path, has_header: bool) -> Result<Ingested> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, "read", e))?;
    ingest_str(&text, has_header)
}

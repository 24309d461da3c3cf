//! The setting-A versus masked-setting comparison table.

use serde::{Deserialize, Serialize};

use super::{calibrate, Binding, PrivacyBudget, ProblemShape};
use crate::par::{map_indices, Exec};
use crate::{Error, Result};

pub const TABLE1_HEADER: &str = "epsilon,delta,p,n,sigma_nec_A,sigma_suf_A,sigma_BC,ratio";

/// Printed precision of the σ columns and the ratio column.
const SIGMA_DECIMALS: i32 = 1;
const RATIO_DECIMALS: i32 = 3;

/// Parameter grid, iterated ε-major then δ, p, n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Grid {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub ps: Vec<usize>,
    pub ns: Vec<usize>,
}

impl Default for Table1Grid {
    fn default() -> Self {
        Table1Grid {
            epsilons: vec![0.1, 0.01, 0.001],
            deltas: vec![0.01, 0.001],
            ps: vec![1, 5, 20],
            ns: vec![100, 1000, 10_000],
        }
    }
}

impl Table1Grid {
    fn points(&self) -> Vec<(f64, f64, usize, usize)> {
        let mut out = Vec::new();
        for &e in &self.epsilons {
            for &d in &self.deltas {
                for &p in &self.ps {
                    for &n in &self.ns {
                        out.push((e, d, p, n));
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub epsilon: f64,
    pub delta: f64,
    pub p: usize,
    pub n: usize,
    pub sigma_nec_a: f64,
    pub sigma_suf_a: f64,
    pub sigma_bc: f64,
    pub ratio: f64,
    pub binding: Binding,
}

impl Table1Row {
    /// Row rounded to printed precision, as a CSV line.
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{:.s$},{:.s$},{:.s$},{:.r$}",
            self.epsilon,
            self.delta,
            self.p,
            self.n,
            self.sigma_nec_a,
            self.sigma_suf_a,
            self.sigma_bc,
            self.ratio,
            s = SIGMA_DECIMALS as usize,
            r = RATIO_DECIMALS as usize,
        )
    }

    fn key(&self) -> (u64, u64, usize, usize) {
        (self.epsilon.to_bits(), self.delta.to_bits(), self.p, self.n)
    }
}

fn row_for(e: f64, d: f64, p: usize, n: usize) -> Result<Table1Row> {
    let report = calibrate(&PrivacyBudget::new(e, d)?, &ProblemShape::new(n, p)?)?;
    let missing = |what: &str| {
        Error::domain(format!(
            "table row (epsilon={e}, delta={d}) outside the setting-A regime: {what} undefined"
        ))
    };
    let suf = report
        .sigma_sufficient_a
        .ok_or_else(|| missing("sufficient bound"))?;
    Ok(Table1Row {
        epsilon: e,
        delta: d,
        p,
        n,
        sigma_nec_a: report
            .sigma_necessary_a
            .ok_or_else(|| missing("necessary bound"))?,
        sigma_suf_a: suf,
        sigma_bc: report.sigma_joint_bc,
        ratio: report.sigma_joint_bc / suf,
        binding: report.binding_formula,
    })
}

/// Computes one row per grid point. Rows come back in grid order whatever
/// the execution policy.
pub fn table1_rows(grid: &Table1Grid, exec: Exec) -> Result<Vec<Table1Row>> {
    let points = grid.points();
    map_indices(exec, points.len(), |i| {
        let (e, d, p, n) = points[i];
        row_for(e, d, p, n)
    })
    .into_iter()
    .collect()
}

/// CSV text (header plus one line per row) for the given grid.
pub fn table1(grid: &Table1Grid, exec: Exec) -> Result<String> {
    let rows = table1_rows(grid, exec)?;
    Ok(to_csv(&rows))
}

pub fn to_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from(TABLE1_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv_line());
        out.push('\n');
    }
    out
}

/// A reference row as printed: the four numeric result columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub epsilon: f64,
    pub delta: f64,
    pub p: usize,
    pub n: usize,
    pub values: [f64; 4],
}

/// Parses a reference table in the `TABLE1_HEADER` layout.
pub fn parse_reference(text: &str) -> Result<Vec<ReferenceRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == TABLE1_HEADER => {}
        Some(h) => return Err(Error::domain(format!("unexpected header: {h}"))),
        None => return Err(Error::domain("empty reference table")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != 8 {
                return Err(Error::domain(format!(
                    "line {}: expected 8 columns, found {}",
                    i + 2,
                    cells.len()
                )));
            }
            let num = |j: usize| -> Result<f64> {
                cells[j].parse::<f64>().map_err(|_| {
                    Error::domain(format!(
                        "line {}, column {}: not a number: {:?}",
                        i + 2,
                        j + 1,
                        cells[j]
                    ))
                })
            };
            Ok(ReferenceRow {
                epsilon: num(0)?,
                delta: num(1)?,
                p: num(2)? as usize,
                n: num(3)? as usize,
                values: [num(4)?, num(5)?, num(6)?, num(7)?],
            })
        })
        .collect()
}

/// One cell that differs from the reference by more than its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellMismatch {
    pub epsilon: f64,
    pub delta: f64,
    pub p: usize,
    pub n: usize,
    pub column: &'static str,
    pub computed: f64,
    pub reference: f64,
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

/// Compares computed rows (rounded to printed precision) against reference
/// rows matched on (ε, δ, p, n). Reference rows with no computed
/// counterpart, and vice versa, are reported as mismatches with NaN.
pub fn diff_against_reference(
    rows: &[Table1Row],
    reference: &[ReferenceRow],
    tol_sigma: f64,
    tol_ratio: f64,
) -> Vec<CellMismatch> {
    const COLUMNS: [&str; 4] = ["sigma_nec_A", "sigma_suf_A", "sigma_BC", "ratio"];
    let mut out = Vec::new();
    for r in reference {
        let key = (r.epsilon.to_bits(), r.delta.to_bits(), r.p, r.n);
        let Some(row) = rows.iter().find(|c| c.key() == key) else {
            out.push(CellMismatch {
                epsilon: r.epsilon,
                delta: r.delta,
                p: r.p,
                n: r.n,
                column: "row",
                computed: f64::NAN,
                reference: f64::NAN,
            });
            continue;
        };
        let computed = [
            round_to(row.sigma_nec_a, SIGMA_DECIMALS),
            round_to(row.sigma_suf_a, SIGMA_DECIMALS),
            round_to(row.sigma_bc, SIGMA_DECIMALS),
            round_to(row.ratio, RATIO_DECIMALS),
        ];
        for j in 0..4 {
            let tol = if j == 3 { tol_ratio } else { tol_sigma };
            // tiny slack for decimal representation of the rounded values
            if (computed[j] - r.values[j]).abs() > tol + 1e-9 {
                out.push(CellMismatch {
                    epsilon: r.epsilon,
                    delta: r.delta,
                    p: r.p,
                    n: r.n,
                    column: COLUMNS[j],
                    computed: computed[j],
                    reference: r.values[j],
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_54_points() {
        assert_eq!(Table1Grid::default().points().len(), 54);
    }

    #[test]
    fn csv_line_precision() {
        let rows = table1_rows(
            &Table1Grid {
                epsilons: vec![0.1],
                deltas: vec![0.01],
                ps: vec![1],
                ns: vec![100],
            },
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(rows[0].to_csv_line(), "0.1,0.01,1,100,23.3,25.4,6.2,0.242");
    }

    #[test]
    fn reference_parse_errors() {
        assert!(parse_reference("").is_err());
        assert!(parse_reference("a,b\n").is_err());
        let bad = format!("{TABLE1_HEADER}\n0.1,0.01,1,100,x,1,1,1\n");
        let err = parse_reference(&bad).unwrap_err();
        assert!(err.to_string().contains("column 5"));
    }

    #[test]
    fn diff_flags_missing_rows() {
        let reference =
            parse_reference(&format!("{TABLE1_HEADER}\n0.5,0.01,1,100,1,1,1,1\n")).unwrap();
        let d = diff_against_reference(&[], &reference, 0.05, 0.005);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].column, "row");
    }
}

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An n×p data matrix, row-major, every entry in [-1, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || p == 0 {
            return Err(Error::domain(format!(
                "data matrix must be non-empty, got {n}x{p}"
            )));
        }
        if values.len() != n * p {
            return Err(Error::domain(format!(
                "expected {} values for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.abs() <= 1.0)) {
            return Err(Error::domain(format!(
                "entry ({}, {}) = {} is outside [-1, 1]",
                i / p,
                i % p,
                values[i]
            )));
        }
        Ok(DataMatrix { n, p, values })
    }

    pub fn zeros(n: usize, p: usize) -> Result<Self> {
        DataMatrix::new(n, p, vec![0.0; n * p])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// `M·X` for row-major M (n×n) and X (n×p).
pub fn left_multiply(m: &[f64], x: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * p];
    for i in 0..n {
        let row = &mut out[i * p..(i + 1) * p];
        for k in 0..n {
            let a = m[i * n + k];
            if a == 0.0 {
                continue;
            }
            for (o, v) in row.iter_mut().zip(&x[k * p..(k + 1) * p]) {
                *o += a * v;
            }
        }
    }
    out
}

/// `YᵀY` (p×p, row-major) for row-major n×p `y`.
pub fn gram(y: &[f64], n: usize, p: usize) -> Vec<f64> {
    let mut g = vec![0.0; p * p];
    for i in 0..n {
        let r = &y[i * p..(i + 1) * p];
        for a in 0..p {
            for b in 0..p {
                g[a * p + b] += r[a] * r[b];
            }
        }
    }
    g
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Least-squares coefficients of the last column on the others, from the
/// Gram matrix of the combined design `[X | y]` (size (k+1)×(k+1)).
pub fn ols_from_gram(g: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim < 2 || g.len() != dim * dim {
        return Err(Error::domain(
            "gram matrix must be square with at least two columns",
        ));
    }
    let k = dim - 1;
    // augmented system [XᵀX | Xᵀy], Gaussian elimination with partial pivoting
    let mut m: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| g[i * dim + j]).collect();
            row.push(g[i * dim + k]);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-300 {
            return Err(Error::domain("design matrix is singular"));
        }
        m.swap(col, piv);
        for r in col + 1..k {
            let f = m[r][col] / m[col][col];
            for c in col..=k {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    let mut beta = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| m[i][j] * beta[j]).sum();
        beta[i] = (m[i][k] - s) / m[i][i];
    }
    Ok(beta)
}

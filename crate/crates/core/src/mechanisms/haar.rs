//! Haar-distributed orthogonal matrices.
//!
//! A matrix of i.i.d. standard normals is factored as `G = QR` by Householder
//! reflections; multiplying column `k` of `Q` by `sign(R_kk)` makes the
//! factorisation unique (positive diagonal in `R`) and the resulting `Q` is
//! exactly Haar distributed on O(n).

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{substream, MAX_DIM};
use crate::{Error, Result};

/// Dense row-major n×n orthogonal matrix and the seed it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrthogonalMatrix {
    n: usize,
    values: Vec<f64>,
    seed: u64,
}

impl OrthogonalMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row-major entries.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    /// max |QᵀQ − I|.
    pub fn orthogonality_residual(&self) -> f64 {
        orthogonality_residual(&self.values, self.n)
    }
}

/// max_{ij} |(QᵀQ − I)_{ij}| for a row-major n×n matrix.
pub fn orthogonality_residual(q: &[f64], n: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..n {
                s += q[k * n + i] * q[k * n + j];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
    }
    worst
}

/// Reusable workspace for drawing many Haar matrices of one size.
#[derive(Debug, Clone)]
pub struct HaarSampler {
    n: usize,
    // column-major working copy of G, overwritten by R and reflectors
    work: Vec<f64>,
    // Householder vectors, column k stored at offset k*n (entries k..n)
    reflectors: Vec<f64>,
    signs: Vec<f64>,
    q: Vec<f64>,
}

impl HaarSampler {
    pub fn new(n: usize) -> Self {
        HaarSampler {
            n,
            work: vec![0.0; n * n],
            reflectors: vec![0.0; n * n],
            signs: vec![0.0; n],
            q: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Draws one matrix; the returned slice is row-major and valid until the
    /// next call.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> &[f64] {
        for v in self.work.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        self.factor();
        &self.q
    }

    fn factor(&mut self) {
        let n = self.n;
        let a = &mut self.work;
        for k in 0..n {
            let col = k * n;
            let norm = a[col + k..col + n]
                .iter()
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            let x0 = a[col + k];
            if k + 1 == n || norm == 0.0 {
                // no reflection left to apply; R_kk is the entry itself
                self.signs[k] = if x0 < 0.0 { -1.0 } else { 1.0 };
                self.reflectors[col + k..col + n].fill(0.0);
                continue;
            }
            let alpha = if x0 > 0.0 { -norm } else { norm };
            // v = x - alpha e_1, normalised
            let v = &mut self.reflectors[col + k..col + n];
            v.copy_from_slice(&a[col + k..col + n]);
            v[0] -= alpha;
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= vnorm;
            }
            self.signs[k] = if alpha < 0.0 { -1.0 } else { 1.0 };
            a[col + k] = alpha;
            for x in a[col + k + 1..col + n].iter_mut() {
                *x = 0.0;
            }
            for j in k + 1..n {
                let cj = j * n;
                let dot: f64 = (k..n).map(|i| v[i - k] * a[cj + i]).sum();
                for i in k..n {
                    a[cj + i] -= 2.0 * dot * v[i - k];
                }
            }
        }
        // Q = H_0 H_1 ... H_{n-2}, accumulated right to left onto I.
        // q is kept column-major here and transposed at the end.
        let q = &mut self.q;
        q.fill(0.0);
        for i in 0..n {
            q[i * n + i] = 1.0;
        }
        for k in (0..n).rev() {
            let v = &self.reflectors[k * n + k..k * n + n];
            if v.iter().all(|&x| x == 0.0) {
                continue;
            }
            for j in k..n {
                let cj = j * n;
                let dot: f64 = (k..n).map(|i| v[i - k] * q[cj + i]).sum();
                for i in k..n {
                    q[cj + i] -= 2.0 * dot * v[i - k];
                }
            }
        }
        for j in 0..n {
            let s = self.signs[j];
            if s < 0.0 {
                for x in q[j * n..(j + 1) * n].iter_mut() {
                    *x = -*x;
                }
            }
        }
        // column-major -> row-major
        for i in 0..n {
            for j in i + 1..n {
                q.swap(i * n + j, j * n + i);
            }
        }
    }
}

/// Draws a Haar-distributed n×n orthogonal matrix from `seed`.
pub fn sample_haar_orthogonal(n: usize, seed: u64) -> Result<OrthogonalMatrix> {
    if n == 0 {
        return Err(Error::domain("orthogonal matrix dimension must be >= 1"));
    }
    if n > MAX_DIM {
        return Err(Error::Refused(format!(
            "n = {n} exceeds the dense Haar sampling cap of {MAX_DIM}"
        )));
    }
    let mut rng = substream(seed, 0);
    Ok(haar_from_rng(n, seed, &mut rng))
}

pub(crate) fn haar_from_rng<R: Rng + ?Sized>(n: usize, seed: u64, rng: &mut R) -> OrthogonalMatrix {
    let mut sampler = HaarSampler::new(n);
    let values = sampler.sample(rng).to_vec();
    OrthogonalMatrix { n, values, seed }
}

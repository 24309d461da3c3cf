//! Monte Carlo check of the sphere-projection integral: for b uniform on the
//! unit sphere of a q-dimensional subspace with orthonormal frame F,
//! E[e^{⟨Fb, v⟩}] equals the one-dimensional moment at ‖Fᵀv‖.

use rand::Rng;
use rand_distr::StandardNormal;

use super::stats::mean_se;
use super::{audit_stream, sphere_exp_moment, AuditReport, Verdict, SE_MULTIPLIER};
use crate::mechanisms::sample_haar_orthogonal;
use crate::{Error, Result};

/// Largest ambient dimension for the sphere check.
pub const MAX_SPHERE_N: usize = 32;

const ABS_SLACK: f64 = 1e-12;

/// First q columns of a Haar orthogonal n×n matrix drawn from `seed`
/// (n×q, row-major).
pub fn random_subspace_frame(n: usize, q: usize, seed: u64) -> Result<Vec<f64>> {
    if q > n {
        return Err(Error::domain(format!(
            "subspace dimension q = {q} exceeds n = {n}"
        )));
    }
    let m = sample_haar_orthogonal(n, seed)?;
    let mut f = Vec::with_capacity(n * q);
    for i in 0..n {
        f.extend_from_slice(&m.values()[i * n..i * n + q]);
    }
    Ok(f)
}

/// Compares the Monte Carlo average of e^{⟨Fb, v⟩} over `samples` uniform
/// sphere points with the quadrature value. The verdict allows three
/// standard errors.
pub fn sphere_integral_check(
    n: usize,
    q: usize,
    v: &[f64],
    subspace_seed: u64,
    samples: usize,
) -> Result<AuditReport> {
    if q < 2 || q > n {
        return Err(Error::domain(format!(
            "need 2 <= q <= n, got q = {q}, n = {n}"
        )));
    }
    if n > MAX_SPHERE_N {
        return Err(Error::Refused(format!(
            "n = {n} exceeds the sphere check limit {MAX_SPHERE_N}"
        )));
    }
    if v.len() != n {
        return Err(Error::domain(format!(
            "v has {} entries, expected {n}",
            v.len()
        )));
    }
    if samples < 2 {
        return Err(Error::domain("at least two samples are needed"));
    }
    let f = random_subspace_frame(n, q, subspace_seed)?;
    // w = Fᵀv, so ⟨Fb, v⟩ = ⟨b, w⟩
    let w: Vec<f64> = (0..q)
        .map(|j| (0..n).map(|i| f[i * q + j] * v[i]).sum())
        .collect();
    let proj_norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let reference = sphere_exp_moment(q as u32, proj_norm)?;

    let mut rng = audit_stream(subspace_seed, 1);
    let mut g = vec![0.0; q];
    let values: Vec<f64> = (0..samples)
        .map(|_| {
            for x in g.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let inner: f64 = g.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norm;
            inner.exp()
        })
        .collect();
    let est = mean_se(&values);
    let ok = (est.value - reference).abs() <= SE_MULTIPLIER * est.std_error + ABS_SLACK;
    Ok(AuditReport {
        estimate: est.value,
        std_error: est.std_error,
        analytic_reference: Some(reference),
        bound_reference: None,
        samples: samples as u64,
        verdict: Verdict::from_ok(ok),
    })
}

//! Numerical verification of the density-ratio machinery.
//!
//! Every check returns an [`AuditReport`]. Monte Carlo checks use a fixed
//! three-standard-error decision rule ([`SE_MULTIPLIER`]); quadrature checks
//! are deterministic and report a zero standard error.
//!
//! Outer Monte Carlo loops are split into independent work items, each with
//! its own ChaCha8 sub-stream of the user seed, and run through
//! [`crate::par::map_indices`].

mod density;
mod gfunc;
mod sphere;
pub mod stats;

pub use density::{
    density_ratio_bound_check_bc, log_density_ratio_a, log_density_ratio_bc_estimate,
    log_haar_average_estimate, violation_probability_a_analytic, violation_probability_mc,
    MAX_BOUND_CHECK_N, MAX_MASKED_P, MAX_VIOLATION_N,
};
pub use gfunc::{
    g_function, g_ratio_bound_check, log_cos_sin_integral, log_g_derivative_fd, log_g_function,
    sphere_exp_moment, sphere_normaliser, QUADRATURE_SLACK,
};
pub use sphere::{random_subspace_frame, sphere_integral_check, MAX_SPHERE_N};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par::Exec;

/// Width of the acceptance band, in standard errors.
pub const SE_MULTIPLIER: f64 = 3.0;

/// Default number of inner Haar draws per density estimate.
pub const DEFAULT_INNER_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Violated,
}

impl Verdict {
    pub fn from_ok(ok: bool) -> Self {
        if ok {
            Verdict::Consistent
        } else {
            Verdict::Violated
        }
    }
}

/// Outcome of one audit. Serialises to
/// `{estimate, std_error, analytic_reference, bound_reference, samples, verdict}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub estimate: f64,
    pub std_error: f64,
    pub analytic_reference: Option<f64>,
    pub bound_reference: Option<f64>,
    pub samples: u64,
    pub verdict: Verdict,
}

impl AuditReport {
    /// Adds an upper bound on the estimated quantity and re-derives the
    /// verdict: the estimate minus three standard errors must not exceed it
    /// (on top of any analytic-reference agreement already required).
    pub fn with_upper_bound(mut self, bound: f64) -> Self {
        self.bound_reference = Some(bound);
        let within = self.estimate - SE_MULTIPLIER * self.std_error <= bound;
        if !within {
            self.verdict = Verdict::Violated;
        }
        self
    }

    pub fn is_consistent(&self) -> bool {
        self.verdict == Verdict::Consistent
    }
}

/// Sampling parameters shared by the Monte Carlo audits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    /// Outer samples (releases drawn from Y(X)).
    pub samples: usize,
    /// Inner Haar draws per density estimate (masked settings only).
    pub inner_samples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        McConfig {
            samples,
            inner_samples: DEFAULT_INNER_SAMPLES,
            seed,
            exec: Exec::default(),
        }
    }

    pub fn with_inner_samples(mut self, inner: usize) -> Self {
        self.inner_samples = inner;
        self
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// Audit RNG for work item `stream` of `seed`.
pub fn audit_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_json_shape() {
        let r = AuditReport {
            estimate: 0.01,
            std_error: 0.001,
            analytic_reference: Some(0.011),
            bound_reference: None,
            samples: 1000,
            verdict: Verdict::Consistent,
        };
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys.len(), 6, "unexpected fields: {keys:?}");
        assert_eq!(v["verdict"], "consistent");
        assert!(v["bound_reference"].is_null());
    }

    #[test]
    fn upper_bound_rule() {
        let r = AuditReport {
            estimate: 0.06,
            std_error: 0.005,
            analytic_reference: None,
            bound_reference: None,
            samples: 100,
            verdict: Verdict::Consistent,
        };
        assert!(r.with_upper_bound(0.05).is_consistent());
        assert!(!r.with_upper_bound(0.04).is_consistent());
    }
}

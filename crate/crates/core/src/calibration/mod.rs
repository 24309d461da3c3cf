//! Noise-scale bounds for the three release settings.
//!
//! Setting A (noise only) has a matching necessary/sufficient pair built on
//! the Gaussian quantile γ̄_δ. Settings B and C (with orthogonal masking)
//! share one sufficient bound driven by the chi-square quantile γ_{δ,np},
//! two relaxations of it, and a joint bound that takes the smaller of the
//! masked bound and the setting-A sufficient bound.
//!
//! All public bounds assume the worst-case neighbour distance ‖Δ‖ = 1. The
//! `*_for_norm` variants take ‖Δ‖ explicitly.

mod table;

pub use table::{
    diff_against_reference, parse_reference, table1, table1_rows, to_csv, CellMismatch,
    ReferenceRow, Table1Grid, Table1Row, TABLE1_HEADER,
};

use serde::{Deserialize, Serialize, Serializer};

use crate::quantiles::{
    chisq_quantile_bound, chisq_upper_quantile, gaussian_upper_quantile, TailProbability,
};
use crate::{Error, Result};

/// Two bounds closer than this are treated as equal when tagging the
/// binding formula.
pub const BINDING_TIE_TOL: f64 = 1e-9;

/// The (ε, δ) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: TailProbability,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::domain(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(PrivacyBudget {
            epsilon,
            delta: TailProbability::new(delta)?,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta.get()
    }

    pub fn tail(&self) -> TailProbability {
        self.delta
    }

    fn require_epsilon_below_one(&self) -> Result<()> {
        if self.epsilon < 1.0 {
            Ok(())
        } else {
            Err(Error::regime(
                "epsilon < 1",
                format!("epsilon = {}", self.epsilon),
            ))
        }
    }

    fn require_delta_below(&self, limit: f64, constraint: &'static str) -> Result<()> {
        if self.delta() < limit {
            Ok(())
        } else {
            Err(Error::regime(
                constraint,
                format!("delta = {}", self.delta()),
            ))
        }
    }
}

/// Matrix dimensions: `n` records by `p` attributes, with `n > p ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemShape {
    n: usize,
    p: usize,
}

impl ProblemShape {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::domain("p must be at least 1"));
        }
        if n <= p {
            return Err(Error::regime("n > p", format!("n = {n}, p = {p}")));
        }
        Ok(ProblemShape { n, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Degrees of freedom of ‖Y − X‖²/σ².
    pub fn dof(&self) -> u64 {
        (self.n * self.p) as u64
    }
}

fn setting_a_regime(budget: &PrivacyBudget) -> Result<()> {
    budget.require_delta_below(0.5, "delta < 1/2")?;
    budget.require_epsilon_below_one()
}

/// Necessary σ for setting A at neighbour distance `delta_norm`:
/// ‖Δ‖·γ̄_δ/ε.
pub fn sigma_necessary_a_for_norm(budget: &PrivacyBudget, delta_norm: f64) -> Result<f64> {
    setting_a_regime(budget)?;
    Ok(delta_norm * gaussian_upper_quantile(budget.tail()) / budget.epsilon())
}

/// Sufficient σ for setting A at neighbour distance `delta_norm`:
/// ‖Δ‖·(γ̄_δ/ε)(1 + 1/(2γ̄_δ²)).
pub fn sigma_sufficient_a_for_norm(budget: &PrivacyBudget, delta_norm: f64) -> Result<f64> {
    setting_a_regime(budget)?;
    let g = gaussian_upper_quantile(budget.tail());
    Ok(delta_norm * g / budget.epsilon() * (1.0 + 1.0 / (2.0 * g * g)))
}

pub fn sigma_necessary_a(budget: &PrivacyBudget) -> Result<f64> {
    sigma_necessary_a_for_norm(budget, 1.0)
}

pub fn sigma_sufficient_a(budget: &PrivacyBudget) -> Result<f64> {
    sigma_sufficient_a_for_norm(budget, 1.0)
}

/// The simpler setting-A sufficient bound 1.7·√ln(1/δ)/ε (δ < 0.05, ε < 1).
pub fn sigma_sufficient_a_simple(budget: &PrivacyBudget) -> Result<f64> {
    budget.require_delta_below(0.05, "delta < 0.05")?;
    budget.require_epsilon_below_one()?;
    Ok(1.7 * budget.tail().ln_inv().sqrt() / budget.epsilon())
}

/// The `b = (n−p)√p + 2p·γ_{δ,np}` coefficient of the masked-setting quadratic.
pub fn thm2_linear_coefficient(budget: &PrivacyBudget, shape: &ProblemShape) -> Result<f64> {
    let gamma = chisq_upper_quantile(budget.tail(), shape.dof())?;
    let (n, p) = (shape.n as f64, shape.p as f64);
    Ok((n - p) * p.sqrt() + 2.0 * p * gamma)
}

/// Sufficient σ for settings B/C: the positive root σ² of
/// `ε(n−p)σ⁴ − bσ² − 2np² = 0`.
pub fn sigma_thm2_bc(budget: &PrivacyBudget, shape: &ProblemShape) -> Result<f64> {
    let b = thm2_linear_coefficient(budget, shape)?;
    let (n, p, eps) = (shape.n as f64, shape.p as f64, budget.epsilon());
    let disc = b * b + 8.0 * n * p * p * (n - p) * eps;
    Ok(((b + disc.sqrt()) / (2.0 * (n - p) * eps)).sqrt())
}

/// Which of the two constituents the joint bound took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    #[serde(rename = "A_sufficient")]
    ASufficient,
    #[serde(rename = "BC_theorem2")]
    BcTheorem2,
}

/// Result of the joint bound for settings B/C.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointBound {
    pub sigma: f64,
    pub binding: Binding,
    /// True when the setting-A regime failed and only the masked bound was used.
    pub degraded: bool,
}

/// min(setting-A sufficient, masked sufficient). Falls back to the masked
/// bound alone (flagged `degraded`) when the setting-A regime does not hold.
pub fn sigma_joint_bc(budget: &PrivacyBudget, shape: &ProblemShape) -> Result<JointBound> {
    let masked = sigma_thm2_bc(budget, shape)?;
    match sigma_sufficient_a(budget) {
        Ok(a) => {
            let binding = if a <= masked + BINDING_TIE_TOL {
                Binding::ASufficient
            } else {
                Binding::BcTheorem2
            };
            Ok(JointBound {
                sigma: a.min(masked),
                binding,
                degraded: false,
            })
        }
        Err(Error::Regime { .. }) => Ok(JointBound {
            sigma: masked,
            binding: Binding::BcTheorem2,
            degraded: true,
        }),
        Err(e) => Err(e),
    }
}

/// √max(2, 4np²/((n−p)ε), 4p·γ_{δ,np}/((n−p)ε)), for ε < 1.
pub fn sigma_cor3_bc(budget: &PrivacyBudget, shape: &ProblemShape) -> Result<f64> {
    budget.require_epsilon_below_one()?;
    let gamma = chisq_upper_quantile(budget.tail(), shape.dof())?;
    let (n, p, eps) = (shape.n as f64, shape.p as f64, budget.epsilon());
    let denom = (n - p) * eps;
    let var = 2f64
        .max(4.0 * n * p * p / denom)
        .max(4.0 * p * gamma / denom);
    Ok(var.sqrt())
}

/// √((2np + 3 ln(1/δ))/(n−p))·√(4p/ε), for ε < 1.
pub fn sigma_cor4_bc(budget: &PrivacyBudget, shape: &ProblemShape) -> Result<f64> {
    budget.require_epsilon_below_one()?;
    let bound = chisq_quantile_bound(budget.tail(), shape.dof());
    let (n, p) = (shape.n as f64, shape.p as f64);
    Ok((bound / (n - p)).sqrt() * (4.0 * p / budget.epsilon()).sqrt())
}

fn six_sig<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*v, 6))
}

fn six_sig_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.serialize_some(&round_sig(*v, 6)),
        None => s.serialize_none(),
    }
}

/// Rounds to `digits` significant digits.
pub fn round_sig(v: f64, digits: i32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - mag);
    (v * scale).round() / scale
}

/// Every bound for one (ε, δ, n, p). Bounds whose regime does not hold
/// are `None`, with the reason listed in `regime_errors`.
///
/// No necessary bound is reported for settings B/C.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub epsilon: f64,
    pub delta: f64,
    pub n: usize,
    pub p: usize,
    #[serde(rename = "sigma_necessary_A", serialize_with = "six_sig_opt")]
    pub sigma_necessary_a: Option<f64>,
    #[serde(rename = "sigma_sufficient_A", serialize_with = "six_sig_opt")]
    pub sigma_sufficient_a: Option<f64>,
    #[serde(rename = "sigma_sufficient_A_simple", serialize_with = "six_sig_opt")]
    pub sigma_sufficient_a_simple: Option<f64>,
    #[serde(rename = "sigma_thm2_BC", serialize_with = "six_sig")]
    pub sigma_thm2_bc: f64,
    #[serde(rename = "sigma_joint_BC", serialize_with = "six_sig")]
    pub sigma_joint_bc: f64,
    #[serde(rename = "sigma_cor3_BC", serialize_with = "six_sig_opt")]
    pub sigma_cor3_bc: Option<f64>,
    #[serde(rename = "sigma_cor4_BC", serialize_with = "six_sig_opt")]
    pub sigma_cor4_bc: Option<f64>,
    pub binding_formula: Binding,
    /// True when the joint bound fell back to the masked bound alone.
    pub joint_degraded: bool,
    /// sigma_joint_BC / sigma_sufficient_A; absent when the latter is.
    #[serde(rename = "ratio_BC_over_A", serialize_with = "six_sig_opt")]
    pub ratio_bc_over_a: Option<f64>,
    pub regime_errors: Vec<String>,
}

impl CalibrationReport {
    /// The masked-setting σ used for release (the joint bound).
    pub fn sigma_bc(&self) -> f64 {
        self.sigma_joint_bc
    }
}

/// Fills every bound for one budget and shape.
pub fn calibrate(budget: &PrivacyBudget, shape: &ProblemShape) -> Result<CalibrationReport> {
    let mut regime_errors = Vec::new();
    let mut keep = |r: Result<f64>| -> Result<Option<f64>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e @ Error::Regime { .. }) => {
                let msg = e.to_string();
                if !regime_errors.contains(&msg) {
                    regime_errors.push(msg);
                }
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };
    let nec = keep(sigma_necessary_a(budget))?;
    let suf = keep(sigma_sufficient_a(budget))?;
    let simple = keep(sigma_sufficient_a_simple(budget))?;
    let cor3 = keep(sigma_cor3_bc(budget, shape))?;
    let cor4 = keep(sigma_cor4_bc(budget, shape))?;
    let thm2 = sigma_thm2_bc(budget, shape)?;
    let joint = sigma_joint_bc(budget, shape)?;
    Ok(CalibrationReport {
        epsilon: budget.epsilon(),
        delta: budget.delta(),
        n: shape.n(),
        p: shape.p(),
        sigma_necessary_a: nec,
        sigma_sufficient_a: suf,
        sigma_sufficient_a_simple: simple,
        sigma_thm2_bc: thm2,
        sigma_joint_bc: joint.sigma,
        sigma_cor3_bc: cor3,
        sigma_cor4_bc: cor4,
        binding_formula: joint.binding,
        joint_degraded: joint.degraded,
        ratio_bc_over_a: suf.map(|a| joint.sigma / a),
        regime_errors,
    })
}

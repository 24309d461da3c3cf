//! Inverse CDFs of the standard Gaussian and central chi-square
//! distributions, and the closed-form brackets and tail bounds that the
//! calibration formulas rely on.
//!
//! Inversion is bracketed bisection with safeguarded Newton steps on the
//! log-survival function. The bracket guarantees convergence; Newton makes
//! it fast. Tolerances: 1e-9 absolute for the Gaussian, 1e-8 relative for
//! the chi-square.

mod gamma;

pub use gamma::{
    gamma_p, gamma_q, ln_gamma, ln_gamma_pq, ln_normal_pdf, ln_normal_sf, normal_cdf, normal_sf,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Above this many degrees of freedom the chi-square quantile starts from
/// the Wilson–Hilferty approximation and takes two Newton steps.
pub const WILSON_HILFERTY_DOF: u64 = 10_000_000;

/// A probability strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TailProbability(f64);

impl TailProbability {
    pub fn new(delta: f64) -> Result<Self> {
        if delta > 0.0 && delta < 1.0 {
            Ok(TailProbability(delta))
        } else {
            Err(Error::domain(format!(
                "tail probability must lie in (0, 1), got {delta}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// ln(1/δ)
    pub fn ln_inv(self) -> f64 {
        -self.0.ln()
    }
}

impl TryFrom<f64> for TailProbability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        TailProbability::new(value)
    }
}

impl From<TailProbability> for f64 {
    fn from(value: TailProbability) -> f64 {
        value.0
    }
}

/// `lower ≤ exact ≤ upper` for the upper Gaussian quantile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileBracket {
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
}

impl QuantileBracket {
    pub fn holds_strictly(&self) -> bool {
        self.lower < self.exact && self.exact < self.upper
    }
}

/// Outcome of one Birgé tail check: `tail_prob ≤ bound_prob` is the claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirgeCheck {
    pub dof: u64,
    pub x: f64,
    pub threshold: f64,
    pub bound_prob: f64,
    pub tail_prob: f64,
}

impl BirgeCheck {
    pub fn holds(&self) -> bool {
        self.tail_prob <= self.bound_prob
    }
}

/// Solves `ln S(t) = ln δ` for a decreasing survival function `S`.
///
/// `ln_sf` and `ln_pdf` must be consistent (`d/dt ln S = -pdf / S`). The root
/// is kept inside `[lo, hi]`; any Newton step that leaves the bracket is
/// replaced by bisection.
fn invert_survival(
    ln_delta: f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
    ln_sf: impl Fn(f64) -> f64,
    ln_pdf: impl Fn(f64) -> f64,
    abs_tol: impl Fn(f64) -> f64,
) -> f64 {
    let mut t = start.clamp(lo, hi);
    for _ in 0..400 {
        let h = ln_sf(t) - ln_delta;
        if h == 0.0 {
            return t;
        }
        // S decreasing: h > 0 means t is left of the root
        if h > 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let slope = -(ln_pdf(t) - ln_sf(t)).exp();
        let mut next = t - h / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let step = (next - t).abs();
        t = next;
        if step < abs_tol(t) || (hi - lo) < abs_tol(t) {
            break;
        }
    }
    t
}

/// Upper δ-quantile of the standard Gaussian: `t` with `P[Z > t] = δ`.
pub fn gaussian_upper_quantile(delta: TailProbability) -> f64 {
    let d = delta.get();
    if d == 0.5 {
        return 0.0;
    }
    if d > 0.5 {
        return -gaussian_upper_quantile(TailProbability(1.0 - d));
    }
    let ln_delta = d.ln();
    // P[Z > t] < e^{-t²/2}/2 for t > 0, so the root is below sqrt(2 ln(1/(2δ))) + 1
    let hi = (2.0 * (-ln_delta - std::f64::consts::LN_2).max(0.0)).sqrt() + 1.0;
    let start = (2.0 * -ln_delta).sqrt() * 0.9;
    invert_survival(
        ln_delta,
        0.0,
        hi,
        start,
        ln_normal_sf,
        ln_normal_pdf,
        |_| 1e-13,
    )
}

/// The closed-form bracket `√ln(1/δ) < γ̄_δ < √(2 ln(1/δ))`, valid for δ < 0.05.
pub fn gaussian_quantile_bracket(delta: TailProbability) -> Result<QuantileBracket> {
    if delta.get() >= 0.05 {
        return Err(Error::regime(
            "delta < 0.05",
            format!("delta = {}", delta.get()),
        ));
    }
    let l = delta.ln_inv();
    Ok(QuantileBracket {
        lower: l.sqrt(),
        exact: gaussian_upper_quantile(delta),
        upper: (2.0 * l).sqrt(),
    })
}

fn ln_chisq_pdf(k: f64, x: f64) -> f64 {
    let a = 0.5 * k;
    (a - 1.0) * (0.5 * x).ln() - 0.5 * x - ln_gamma(a) - std::f64::consts::LN_2
}

/// ln P[χ²_dof > x].
pub fn ln_chisq_sf(dof: u64, x: f64) -> f64 {
    ln_gamma_pq(0.5 * dof as f64, 0.5 * x).1
}

/// P[χ²_dof ≤ x].
pub fn chisq_cdf(dof: u64, x: f64) -> f64 {
    ln_gamma_pq(0.5 * dof as f64, 0.5 * x).0.exp()
}

/// Upper δ-quantile of the central chi-square with `dof` degrees of freedom.
pub fn chisq_upper_quantile(delta: TailProbability, dof: u64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::domain("chi-square degrees of freedom must be >= 1"));
    }
    let k = dof as f64;
    let ln_delta = delta.get().ln();
    let z = gaussian_upper_quantile(delta);
    let h = 2.0 / (9.0 * k);
    let wilson_hilferty = k * (1.0 - h + z * h.sqrt()).max(1e-3).powi(3);

    let ln_sf = |x: f64| ln_chisq_sf(dof, x);
    let ln_pdf = |x: f64| ln_chisq_pdf(k, x);

    if dof > WILSON_HILFERTY_DOF {
        let mut x = wilson_hilferty;
        for _ in 0..2 {
            let slope = -(ln_pdf(x) - ln_sf(x)).exp();
            x -= (ln_sf(x) - ln_delta) / slope;
        }
        return Ok(x);
    }

    let mut hi = chisq_quantile_bound(delta, dof).max(wilson_hilferty) * 1.5 + 10.0;
    while ln_sf(hi) > ln_delta {
        hi *= 2.0;
    }
    Ok(invert_survival(
        ln_delta,
        0.0,
        hi,
        wilson_hilferty,
        ln_sf,
        ln_pdf,
        |x| 1e-12 * x.max(1e-300),
    ))
}

/// The simple upper bound `2·dof + 3 ln(1/δ)` on the chi-square quantile.
pub fn chisq_quantile_bound(delta: TailProbability, dof: u64) -> f64 {
    2.0 * dof as f64 + 3.0 * delta.ln_inv()
}

/// Central Birgé tail inequality
/// `P[χ²_dof ≥ dof + 2√(dof·x) + 2x] ≤ e^{-x}`.
pub fn birge_tail_check(dof: u64, x: f64) -> Result<BirgeCheck> {
    if dof == 0 {
        return Err(Error::domain("chi-square degrees of freedom must be >= 1"));
    }
    if !(x > 0.0) {
        return Err(Error::domain(format!("x must be positive, got {x}")));
    }
    let k = dof as f64;
    let threshold = k + 2.0 * (k * x).sqrt() + 2.0 * x;
    Ok(BirgeCheck {
        dof,
        x,
        threshold,
        bound_prob: (-x).exp(),
        tail_prob: ln_chisq_sf(dof, threshold).exp(),
    })
}

//! The function G_q(t) = ∫₋₁¹ e^{tu} (1−u²)^{(q−2)/2} du and the
//! sphere-projection integral.
//!
//! With u = cos θ both integrals become ∫₀^π e^{t cos θ} sin^k θ dθ
//! (k = q−1 for G_q, k = q−2 for the sphere marginal), which is smooth on
//! the closed interval. It is evaluated as
//! `t + ln ∫ e^{t(cos θ − 1)} sin^k θ dθ` so the integrand never exceeds 1.
//! For t > 200 the mass sits in a window of width ~1/√t around the peak, so
//! the domain is cut where the integrand drops below e^{-800} and extra
//! breakpoints are placed around the peak.

use super::{AuditReport, Verdict};
use crate::quadrature::integrate_pieces;
use crate::quantiles::ln_gamma;
use crate::{Error, Result};

const QUAD_TOL: f64 = 1e-13;
const WIDE_T: f64 = 200.0;
const CUTOFF: f64 = 800.0;

/// Slack for comparisons that hold with equality up to quadrature error.
pub const QUADRATURE_SLACK: f64 = 1e-9;

/// ln ∫₀^π e^{t cos θ} sin^k θ dθ for k ≥ 0.
pub fn log_cos_sin_integral(k: f64, t: f64) -> f64 {
    let t = t.abs();
    let f = |theta: f64| {
        let s = theta.sin();
        let log_sin = if k == 0.0 { 0.0 } else { k * s.ln() };
        (t * (theta.cos() - 1.0) + log_sin).exp()
    };
    let peak = if t == 0.0 {
        std::f64::consts::FRAC_PI_2
    } else {
        // t sin²θ = k cos θ
        let c = (-k + (k * k + 4.0 * t * t).sqrt()) / (2.0 * t);
        c.clamp(-1.0, 1.0).acos()
    };
    let upper = if t > WIDE_T {
        (1.0 - CUTOFF / t).max(-1.0).acos()
    } else {
        std::f64::consts::PI
    };
    let width = 1.0 / (t + k + 1.0).sqrt();
    let mut breaks = vec![0.0, upper];
    for m in [-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0] {
        let b = peak + m * width;
        if b > 0.0 && b < upper {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    t + integrate_pieces(f, &breaks, QUAD_TOL).ln()
}

fn check_q(q: u32) -> Result<()> {
    if q < 2 {
        return Err(Error::domain(format!("G_q requires q >= 2, got {q}")));
    }
    Ok(())
}

/// ln G_q(t). Even in t.
pub fn log_g_function(q: u32, t: f64) -> Result<f64> {
    check_q(q)?;
    Ok(log_cos_sin_integral(q as f64 - 1.0, t))
}

/// G_q(t); overflows to +∞ past t ≈ 709, use [`log_g_function`] there.
pub fn g_function(q: u32, t: f64) -> Result<f64> {
    log_g_function(q, t).map(f64::exp)
}

/// c̄_q = ∫₋₁¹ (1−u²)^{(q−3)/2} du = √π Γ((q−1)/2) / Γ(q/2).
pub fn sphere_normaliser(q: u32) -> f64 {
    let q = q as f64;
    (0.5 * std::f64::consts::PI.ln() + ln_gamma(0.5 * (q - 1.0)) - ln_gamma(0.5 * q)).exp()
}

/// E[e^{r b₁}] for b uniform on the unit sphere S^{q−1}:
/// ∫₋₁¹ e^{ru} (1−u²)^{(q−3)/2} du / c̄_q.
pub fn sphere_exp_moment(q: u32, r: f64) -> Result<f64> {
    if q < 2 {
        return Err(Error::domain(format!(
            "sphere dimension q must be >= 2, got {q}"
        )));
    }
    Ok((log_cos_sin_integral(q as f64 - 2.0, r) - sphere_normaliser(q).ln()).exp())
}

/// d/dt ln G_q at `t` by central differences.
pub fn log_g_derivative_fd(q: u32, t: f64) -> Result<f64> {
    let h = 1e-4 * t.abs().max(1.0);
    let l0 = log_g_function(q, t)?;
    let up = (log_g_function(q, t + h)? - l0).exp();
    let down = (log_g_function(q, t - h)? - l0).exp();
    Ok((up - down) / (2.0 * h))
}

/// Checks G_q(t2)/G_q(t1) ≤ exp(|t1² − t2²|/(2q)), and 0 < G_q′ < (t/q)G_q
/// at the midpoint. `estimate` is the ratio, `bound_reference` the bound.
pub fn g_ratio_bound_check(q: u32, t1: f64, t2: f64) -> Result<AuditReport> {
    check_q(q)?;
    if !(t1 > 0.0 && t2 > 0.0) {
        return Err(Error::domain("t1 and t2 must be positive"));
    }
    let log_ratio = log_g_function(q, t2)? - log_g_function(q, t1)?;
    let log_bound = (t1 * t1 - t2 * t2).abs() / (2.0 * q as f64);
    let ratio_ok = log_ratio <= log_bound + QUADRATURE_SLACK;

    let mid = 0.5 * (t1 + t2);
    // G'/G by finite differences, compared with t/q
    let dlog = log_g_derivative_fd(q, mid)?;
    let derivative_ok = dlog > 0.0 && dlog < mid / q as f64;

    Ok(AuditReport {
        estimate: log_ratio.exp(),
        std_error: 0.0,
        analytic_reference: None,
        bound_reference: Some(log_bound.exp()),
        samples: 0,
        verdict: Verdict::from_ok(ratio_ok && derivative_ok),
    })
}

//! Small statistics toolkit for the audits: log-mean-exp with jackknife
//! errors, binomial errors and the two-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

/// ln(mean(e^s)) computed with a max shift.
pub fn log_mean_exp(s: &[f64]) -> f64 {
    let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let sum: f64 = s.iter().map(|v| (v - m).exp()).sum();
    m + (sum / s.len() as f64).ln()
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

struct Shifted {
    shift: f64,
    weights: Vec<f64>,
    total: f64,
}

impl Shifted {
    fn new(s: &[f64]) -> Self {
        let shift = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = s.iter().map(|v| (v - shift).exp()).collect();
        let total = weights.iter().sum();
        Shifted {
            shift,
            weights,
            total,
        }
    }

    fn full(&self) -> f64 {
        self.shift + (self.total / self.weights.len() as f64).ln()
    }

    fn leave_out(&self, i: usize) -> f64 {
        let m = self.weights.len() as f64 - 1.0;
        self.shift + ((self.total - self.weights[i]).max(f64::MIN_POSITIVE) / m).ln()
    }
}

fn jackknife(len: usize, full: f64, leave_out: impl Fn(usize) -> f64) -> Estimate {
    if len < 2 {
        return Estimate {
            value: full,
            std_error: f64::INFINITY,
        };
    }
    let loo: Vec<f64> = (0..len).map(leave_out).collect();
    let mean = loo.iter().sum::<f64>() / len as f64;
    let ss: f64 = loo.iter().map(|v| (v - mean) * (v - mean)).sum();
    let m = len as f64;
    Estimate {
        value: full,
        std_error: ((m - 1.0) / m * ss).sqrt(),
    }
}

/// ln(mean(e^s)) with a jackknife standard error.
pub fn log_mean_exp_jackknife(s: &[f64]) -> Estimate {
    let sh = Shifted::new(s);
    jackknife(s.len(), sh.full(), |i| sh.leave_out(i))
}

/// ln(mean(e^s)) − ln(mean(e^t)) over paired draws, with a jackknife
/// standard error that leaves out one pair at a time.
pub fn log_mean_exp_diff_jackknife(s: &[f64], t: &[f64]) -> Estimate {
    assert_eq!(s.len(), t.len());
    let a = Shifted::new(s);
    let b = Shifted::new(t);
    jackknife(s.len(), a.full() - b.full(), |i| {
        a.leave_out(i) - b.leave_out(i)
    })
}

/// Standard error of a binomial proportion.
pub fn binomial_se(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> Estimate {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Estimate {
        value: mean,
        std_error: (var / n).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

impl KsResult {
    /// True when the test does not reject at `level`.
    pub fn passes(&self, level: f64) -> bool {
        self.p_value > level
    }
}

/// Kolmogorov distribution survival function Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction on λ).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let ne = n1 * n2 / (n1 + n2);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    }
}

//! Gauss–Legendre quadrature with adaptive interval bisection.

use std::sync::OnceLock;

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 40;
// refinement below this relative change is roundoff
const ROUNDOFF: f64 = 1e-15;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_n(x), p0 = P_{n-1}(x)
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    nodes
        .iter()
        .zip(weights)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, abs_tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = fixed(f, a, m);
    let right = fixed(f, m, b);
    let split = left + right;
    let err = (split - whole).abs();
    if depth >= MAX_DEPTH || err <= abs_tol || err <= ROUNDOFF * split.abs() {
        return split;
    }
    adapt(f, a, m, left, 0.5 * abs_tol, depth + 1) + adapt(f, m, b, right, 0.5 * abs_tol, depth + 1)
}

/// Integrates `f` over `[a, b]` to relative tolerance `tol` of the result.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    integrate_pieces(f, &[a, b], tol)
}

/// Integrates `f` over consecutive panels `breaks[0]..breaks[1]..`, to
/// relative tolerance `tol` of the total.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, breaks: &[f64], tol: f64) -> f64 {
    let panels: Vec<(f64, f64, f64)> = breaks
        .windows(2)
        .filter(|w| w[0] != w[1])
        .map(|w| (w[0], w[1], fixed(&f, w[0], w[1])))
        .collect();
    if panels.is_empty() {
        return 0.0;
    }
    let scale: f64 = panels.iter().map(|p| p.2.abs()).sum();
    let abs_tol = tol * scale.max(f64::MIN_POSITIVE) / panels.len() as f64;
    panels
        .iter()
        .map(|&(a, b, whole)| adapt(&f, a, b, whole, abs_tol, 0))
        .sum()
}

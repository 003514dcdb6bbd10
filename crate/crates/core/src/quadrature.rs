//! Gauss-Legendre quadrature with interval doubling.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Relative tolerance between successive refinement levels.
pub const REL_TOL: f64 = 1e-9;
/// Maximum number of interval doublings.
pub const MAX_LEVELS: usize = 6;

const ABS_FLOOR: f64 = 1e-300;

/// Nodes and weights of the `m`-point rule on `[-1, 1]`, computed by Newton
/// iteration on the Legendre polynomial.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl16_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// 16-point Gauss-Legendre on `[a, b]`.
pub fn gl16(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gl16_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(w).map(|(&xi, &wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

/// Composite GL16 on `2^level` equal pieces of `[a, b]`.
pub fn composite(f: &impl Fn(f64) -> f64, a: f64, b: f64, level: usize) -> f64 {
    let pieces = 1usize << level;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * h;
            let hi = if i + 1 == pieces { b } else { lo + h };
            gl16(f, lo, hi)
        })
        .sum()
}

/// Integrates `f` over `[a, b]`, doubling the number of GL16 panels until the
/// relative change drops below [`REL_TOL`] or [`MAX_LEVELS`] is reached.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
    integrate_with(f, a, b, REL_TOL, 0.0)
}

/// As [`integrate`] with explicit relative and absolute tolerances.
pub fn integrate_with(f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut prev = composite(&f, a, b, 0);
    let mut change = f64::INFINITY;
    for level in 1..=MAX_LEVELS {
        let cur = composite(&f, a, b, level);
        change = (cur - prev).abs();
        let scale = cur.abs().max(ABS_FLOOR);
        if !cur.is_finite() {
            break;
        }
        if change <= rel * scale || change <= abs {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureFailure {
        achieved: change / prev.abs().max(ABS_FLOOR),
        levels: MAX_LEVELS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for p in 0..32 {
            let exact = if p % 2 == 0 { 2.0 / (p as f64 + 1.0) } else { 0.0 };
            let got: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p)).sum();
            assert!((got - exact).abs() < 1e-13, "degree {p}: {got} vs {exact}");
        }
    }

    #[test]
    fn adaptive_integration() {
        let v = integrate(|t| (2.0 * std::f64::consts::PI * t).cos().powi(2), 0.0, 1.0).unwrap();
        assert!((v - 0.5).abs() < 1e-13);
        let v = integrate(|t: f64| t.exp(), 0.0, 2.0).unwrap();
        assert!((v - (2f64.exp() - 1.0)).abs() < 1e-12);
        assert_eq!(integrate(|_| 0.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn reports_failure() {
        let r = integrate(|t: f64| 1.0 / t.sqrt() + (1000.0 * t).sin(), 0.0, 1.0);
        assert!(matches!(r, Err(Error::QuadratureFailure { levels: MAX_LEVELS, .. })));
    }
}

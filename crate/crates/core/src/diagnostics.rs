//! Statistics controlling the distance between the discrete and the path
//! experiment, and empirical rate fits over geometric `n` grids.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{sample_ellipsoid, ClassSpec, FourierFunction};
use crate::kernel::{design_points, GaussMarkovKernel};
use crate::rkhs::projection_distance;

/// Default geometric grid of sample sizes.
pub const DEFAULT_N_GRID: [usize; 6] = [16, 32, 64, 128, 256, 512];

/// Allowed distance between a fitted slope and its target.
pub const SLOPE_MARGIN: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; needs at least three points.
    pub stderr: Option<f64>,
    pub points: usize,
}

/// Ordinary least squares `y = intercept + slope x`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<SlopeFit> {
    let m = xs.len();
    if m < 2 || ys.len() != m {
        return None;
    }
    let mf = m as f64;
    let mx = xs.iter().sum::<f64>() / mf;
    let my = ys.iter().sum::<f64>() / mf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = (m > 2).then(|| {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        (rss / (mf - 2.0) / sxx).sqrt()
    });
    Some(SlopeFit {
        slope,
        intercept,
        stderr,
        points: m,
    })
}

/// Slope of `log value` against `log n`, skipping non-finite and
/// non-positive values.
pub fn loglog_slope(ns: &[usize], values: &[f64]) -> Option<SlopeFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite() && **v > 0.0)
        .map(|(&n, v)| ((n as f64).ln(), v.ln()))
        .unzip();
    least_squares_slope(&xs, &ys)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::InvalidArgument("n must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Per-cell terms `(f(t_i) - n int_cell f)^2 / [v(t_i)^2 (q(t_i) - q(t_{i-1}))]`.
fn condition_i_terms(kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<Vec<f64>> {
    check_n(n)?;
    let t = design_points(n);
    let mut prev_q = 0.0;
    let mut out = Vec::with_capacity(n);
    for (i, &ti) in t.iter().enumerate().skip(1) {
        let q = kernel.q(ti);
        let dq = q - prev_q;
        if !(dq > 0.0) || !dq.is_finite() {
            return Err(Error::DegenerateCell { cell: i, increment: dq });
        }
        let v = kernel.v(ti);
        if v == 0.0 || !v.is_finite() {
            return Err(Error::KernelDegenerate(format!("v(t_{i}) = {v}")));
        }
        let d = f.evaluate_at_grid(i, n) - f.cell_average(i, n);
        out.push(d * d / (v * v * dq));
        prev_q = q;
    }
    Ok(out)
}

/// `(1/n) sum_i (f(t_i) - n int_cell f)^2 / [v(t_i)^2 (q(t_i) - q(t_{i-1}))]`.
pub fn condition_i_statistic(kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<f64> {
    Ok(condition_i_terms(kernel, f, n)?.iter().sum::<f64>() / n as f64)
}

/// KL divergence between the original and the cell-averaged discrete
/// experiment by the conditioning chain: `condition_i / 2`.
///
/// Each step conditions on the Brownian value at the previous design point,
/// so this is the divergence of the joint law of observations and that
/// Brownian history. It equals [`kl_gaussian_dense`] when `v` is constant and
/// bounds it from above otherwise.
pub fn kl_e1_vs_e1prime(kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<f64> {
    Ok(0.5 * condition_i_statistic(kernel, f, n)?)
}

/// `1/2 dmu^T (n Sigma)^{-1} dmu` for the two discrete experiments, with
/// `Sigma` the exact covariance of the increments `xi_1..xi_n`.
pub fn kl_gaussian_dense(kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<f64> {
    check_n(n)?;
    let t = &design_points(n)[1..];
    let c = kernel.gram_matrix(t)?;
    let diff = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else if j + 1 == i {
            -1.0
        } else {
            0.0
        }
    });
    let sigma = &diff * c * diff.transpose() * n as f64;
    let dmu = DVector::from_fn(n, |i, _| f.evaluate_at_grid(i + 1, n) - f.cell_average(i + 1, n));
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::SingularCovariance(format!("increment covariance of `{}`", kernel.name())))?;
    Ok(0.5 * dmu.dot(&chol.solve(&dmu)))
}

/// `sqrt(n) * sqrt(D_n)` with `D_n` the squared RKHS projection distance.
pub fn condition_ii_statistic(kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<f64> {
    Ok((n as f64).sqrt() * projection_distance(kernel, f, n)?.sqrt())
}

/// Squared sums of the discretisation error split at frequency `K = n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppendixBTerms {
    pub n: usize,
    /// `sum_i (f_K(t_i) - n int_cell f_K)^2`.
    pub a_sum: f64,
    /// `sum_i tail(t_i)^2`.
    pub b_sum: f64,
    /// `sum_i (n int_cell tail)^2`.
    pub c_sum: f64,
    /// `sum_i (f(t_i) - n int_cell f)^2`.
    pub total: f64,
    /// `(1/n) sum_i A_i^2 - sum_j |F_j|^2` for the direct DFT of `A`.
    pub parseval_residual: f64,
    /// `total <= 3 (a_sum + b_sum + c_sum)`.
    pub split_bound_holds: bool,
}

/// Direct `O(n^2)` DFT `F_j = (1/n) sum_i x_i exp(-2 pi i i j / n)`,
/// `i = 1..=n`, `j = 0..n`.
pub fn direct_dft(x: &[f64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|j| {
            let acc: Complex64 = x
                .iter()
                .enumerate()
                .map(|(idx, &xi)| {
                    let r = ((idx + 1) * j) % n;
                    xi * Complex64::from_polar(1.0, -2.0 * PI * r as f64 / n as f64)
                })
                .sum();
            acc / n as f64
        })
        .collect()
}

pub fn appendix_b_decomposition(f: &FourierFunction, n: usize) -> Result<AppendixBTerms> {
    check_n(n)?;
    let (low, tail) = f.split_at(n);
    let mut a = Vec::with_capacity(n);
    let (mut b_sum, mut c_sum, mut total) = (0.0, 0.0, 0.0);
    for i in 1..=n {
        a.push(low.evaluate_at_grid(i, n) - low.cell_average(i, n));
        b_sum += tail.evaluate_at_grid(i, n).powi(2);
        c_sum += tail.cell_average(i, n).powi(2);
        total += (f.evaluate_at_grid(i, n) - f.cell_average(i, n)).powi(2);
    }
    let a_sum: f64 = a.iter().map(|x| x * x).sum();
    let spectral: f64 = direct_dft(&a).iter().map(|c| c.norm_sqr()).sum();
    let bound = 3.0 * (a_sum + b_sum + c_sum);
    Ok(AppendixBTerms {
        n,
        a_sum,
        b_sum,
        c_sum,
        total,
        parseval_residual: a_sum / n as f64 - spectral,
        split_bound_holds: total <= bound * (1.0 + 1e-12) + 1e-300,
    })
}

/// Upper bound for `a_sum` over `Theta(beta, L)`:
/// `3 pi^2 L^2 / n * max_{1 <= k <= n} k^2 (1 + k)^{-2 beta}`, which is of
/// order `max(n^{-1}, n^{1 - 2 beta})`.
pub fn a_sum_bound(n: usize, beta: f64, l: f64) -> f64 {
    let peak = (1..=n)
        .map(|k| (k as f64).powi(2) * (1.0 + k as f64).powf(-2.0 * beta))
        .fold(0.0, f64::max);
    3.0 * PI * PI * l * l * peak / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformReport {
    pub n: usize,
    /// `n sup_j (mu(s_j) - mu_{j,n})^2`.
    pub mean_term: f64,
    /// `n sup_j (q'(s_j) - sigma^2_{j,n})^2`.
    pub variance_term: f64,
    pub value: f64,
    pub warning: Option<String>,
}

/// Discrepancy between the transformed increments of the discrete experiment
/// and the drift and diffusion of the path experiment after the change of
/// scale, at the points `s_j = j / (n + 1)`.
pub fn transformation_discrepancy(kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<TransformReport> {
    check_n(n)?;
    let t = design_points(n);
    let nf = n as f64;
    let v_at = |x: f64| -> Result<f64> {
        let v = kernel.v(x);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::KernelDegenerate(format!("v({x}) = {v} is not positive")))
        }
    };
    let mut partial = 0.0;
    let mut prev_ratio = 0.0;
    let mut prev_q = kernel.q(0.0);
    let (mut mean_sup, mut var_sup) = (0.0f64, 0.0f64);
    for j in 1..=n {
        let vj = v_at(t[j])?;
        partial += f.evaluate_at_grid(j, n);
        let mu_jn = partial / vj - prev_ratio;
        prev_ratio = partial / vj;
        let q = kernel.q(t[j]);
        let sigma2 = (q - prev_q) / (t[j] - t[j - 1]);
        prev_q = q;

        let s = j as f64 / (nf + 1.0);
        let vs = v_at(s)?;
        let mu_s = (f.evaluate(s) * vs - kernel.v_prime(s) * f.antiderivative(s)) / (vs * vs);
        mean_sup = mean_sup.max((mu_s - mu_jn).powi(2));
        var_sup = var_sup.max((kernel.q_prime(s) - sigma2).powi(2));
    }
    let warning = (!kernel.has_analytic_derivatives()).then(|| {
        "custom kernel: derivatives are finite differences and the second derivative of q is not checked".to_string()
    });
    Ok(TransformReport {
        n,
        mean_term: nf * mean_sup,
        variance_term: nf * var_sup,
        value: nf * (mean_sup + var_sup),
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    ConditionI,
    ConditionIi,
    Kl,
    Transformation,
    AppendixBTerms,
}

impl Statistic {
    pub const ALL: [Statistic; 5] = [
        Statistic::ConditionI,
        Statistic::ConditionIi,
        Statistic::Kl,
        Statistic::Transformation,
        Statistic::AppendixBTerms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::ConditionI => "condition_i",
            Statistic::ConditionIi => "condition_ii",
            Statistic::Kl => "kl",
            Statistic::Transformation => "transformation",
            Statistic::AppendixBTerms => "appendix_b_terms",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown statistic `{s}`")))
    }

    pub fn evaluate(self, kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<f64> {
        match self {
            Statistic::ConditionI => condition_i_statistic(kernel, f, n),
            Statistic::ConditionIi => condition_ii_statistic(kernel, f, n),
            Statistic::Kl => kl_e1_vs_e1prime(kernel, f, n),
            Statistic::Transformation => Ok(transformation_discrepancy(kernel, f, n)?.value),
            Statistic::AppendixBTerms => {
                let r = appendix_b_decomposition(f, n)?;
                Ok(r.a_sum + r.b_sum + r.c_sum)
            }
        }
    }

    /// Expected log-log slope for a fixed smooth function (`beta = None`) or
    /// for the maximum over a `Theta(beta, L)` family.
    pub fn target_exponent(self, beta: Option<f64>) -> f64 {
        let b = beta.unwrap_or(f64::INFINITY);
        match self {
            Statistic::ConditionI | Statistic::Kl | Statistic::AppendixBTerms | Statistic::Transformation => {
                (-1.0f64).max(1.0 - 2.0 * b)
            }
            Statistic::ConditionIi => (-0.5f64).max(0.5 - b),
        }
    }
}

/// Finite families standing in for suprema over a class.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// The same functions at every `n`.
    Fixed(Vec<(String, FourierFunction)>),
    /// `L (1 + k)^{-beta} cos(2 pi k x)` at `k` in `{1, n/2, n, 2n}`.
    SingleFrequency { beta: f64, l: f64 },
    /// Seeded members of `Theta(beta, L)` with cutoff `2n`.
    Random { beta: f64, l: f64, count: usize, seed: u64 },
}

impl Family {
    pub fn cosine() -> Self {
        Family::Fixed(vec![("cos(2pi x)".into(), FourierFunction::cosine(1, 1.0))])
    }

    pub fn id(&self) -> String {
        match self {
            Family::Fixed(members) => {
                let names: Vec<&str> = members.iter().map(|(s, _)| s.as_str()).collect();
                format!("fixed[{}]", names.join(";"))
            }
            Family::SingleFrequency { beta, l } => format!("single-freq(beta={beta},L={l})"),
            Family::Random { beta, l, count, seed } => format!("random(beta={beta},L={l},count={count},seed={seed})"),
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match *self {
            Family::Fixed(_) => None,
            Family::SingleFrequency { beta, .. } | Family::Random { beta, .. } => Some(beta),
        }
    }

    pub fn members(&self, n: usize) -> Result<Vec<(String, FourierFunction)>> {
        match self {
            Family::Fixed(m) => Ok(m.clone()),
            Family::SingleFrequency { beta, l } => {
                let mut ks = vec![1, n / 2, n, 2 * n];
                ks.retain(|&k| k > 0);
                ks.dedup();
                Ok(ks
                    .into_iter()
                    .map(|k| {
                        let a = l * (1.0 + k as f64).powf(-beta);
                        (format!("cos(2pi {k} x)"), FourierFunction::cosine(k, a))
                    })
                    .collect())
            }
            Family::Random { beta, l, count, seed } => {
                let spec = ClassSpec::sobolev(*beta, *l)?;
                (0..*count as u64)
                    .map(|i| Ok((format!("seed {}", seed + i), sample_ellipsoid(&spec, 2 * n, seed + i)?)))
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub n: usize,
    pub member: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub statistic: String,
    pub kernel: String,
    pub family: String,
    pub n_values: Vec<usize>,
    /// Family maximum per `n`; a lower bound for the supremum over the class.
    pub values: Vec<f64>,
    pub argmax: Vec<String>,
    pub cells: Vec<RateCell>,
    /// `n` values used in the fit (upper half of the grid).
    pub fit_n: Vec<usize>,
    pub slope: Option<f64>,
    pub stderr: Option<f64>,
    pub target: f64,
    pub margin: f64,
    pub passed: bool,
    pub degenerate: bool,
    /// `n` values with a non-finite family maximum.
    pub excluded: Vec<usize>,
    pub note: String,
}

impl RateReport {
    pub fn to_csv(&self, extra_meta: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# statistic={}, kernel={}, family={}", self.statistic, self.kernel, self.family);
        let fmt_opt = |x: Option<f64>| x.map_or("none".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "# slope={}, stderr={}, target={}, margin={}, passed={}, degenerate={}",
            fmt_opt(self.slope),
            fmt_opt(self.stderr),
            self.target,
            self.margin,
            self.passed,
            self.degenerate
        );
        for line in extra_meta {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("n,statistic,family_member\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{}", c.n, c.value, c.member);
        }
        out
    }
}

/// Evaluates `stat` for every family member at every `n`, takes the
/// per-`n` maximum and fits the log-log slope on the upper half of the grid.
/// Passes iff the slope is within [`SLOPE_MARGIN`] of `target` (default
/// [`Statistic::target_exponent`]).
pub fn rate_sweep(
    stat: Statistic,
    kernel: &GaussMarkovKernel,
    family: &Family,
    ns: &[usize],
    target: Option<f64>,
) -> Result<RateReport> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("n grid must be non-empty and strictly increasing".into()));
    }
    let mut jobs = Vec::new();
    for &n in ns {
        let members = family.members(n)?;
        if members.is_empty() {
            return Err(Error::InvalidArgument("family is empty".into()));
        }
        for (name, f) in members {
            jobs.push((n, name, f));
        }
    }
    let cells: Vec<RateCell> = jobs
        .into_par_iter()
        .map(|(n, member, f)| {
            let value = stat.evaluate(kernel, &f, n)?;
            Ok(RateCell { n, member, value })
        })
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(ns.len());
    let mut argmax = Vec::with_capacity(ns.len());
    let mut excluded = Vec::new();
    for &n in ns {
        let mut best: Option<&RateCell> = None;
        let mut finite = true;
        for c in cells.iter().filter(|c| c.n == n) {
            if !c.value.is_finite() {
                finite = false;
                continue;
            }
            if best.is_none_or(|b| c.value > b.value) {
                best = Some(c);
            }
        }
        match best {
            Some(b) if finite => {
                values.push(b.value);
                argmax.push(b.member.clone());
            }
            _ => {
                values.push(f64::NAN);
                argmax.push(String::new());
                excluded.push(n);
            }
        }
    }

    let start = if ns.len() >= 4 { ns.len() / 2 } else { 0 };
    let fit_n = ns[start..].to_vec();
    let fit = loglog_slope(&fit_n, &values[start..]);
    let target = target.unwrap_or_else(|| stat.target_exponent(family.beta()));
    let degenerate = values.iter().all(|v| *v == 0.0) || fit.is_none();
    let passed = fit.is_some_and(|f| (f.slope - target).abs() <= SLOPE_MARGIN);
    let mut note = String::from("values are family maxima, lower bounds for the supremum over the class");
    if degenerate {
        note.push_str("; slope undefined (fewer than two positive finite values in the fit range)");
    }
    if !excluded.is_empty() {
        note.push_str("; non-finite entries excluded");
    }
    Ok(RateReport {
        statistic: stat.name().into(),
        kernel: kernel.name().into(),
        family: family.id(),
        n_values: ns.to_vec(),
        values,
        argmax,
        cells,
        fit_n,
        slope: fit.map(|f| f.slope),
        stderr: fit.and_then(|f| f.stderr),
        target,
        margin: SLOPE_MARGIN,
        passed,
        degenerate,
        excluded,
        note,
    })
}

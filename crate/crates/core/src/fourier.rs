//! Real regression functions as finite Fourier series
//! `f = sum_k theta_k e_k` with `e_k(t) = exp(-2 pi i k t)`, plus Sobolev
//! ellipsoid and Hölder class membership.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{SimRng, AUX_STREAM};

/// Tolerance for Hermitian symmetry and real-valuedness checks.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Exponent slack used by [`sample_ellipsoid`].
pub const ELLIPSOID_EPS: f64 = 0.1;

/// Real-valued trigonometric polynomial stored as its half spectrum
/// `theta_0, ..., theta_K`; `theta_{-k} = conj(theta_k)` is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFunction {
    half: Vec<Complex64>,
}

impl FourierFunction {
    /// From `theta_0, ..., theta_K`. `theta_0` must be real.
    pub fn from_half_spectrum(half: Vec<Complex64>) -> Result<Self> {
        let half = if half.is_empty() { vec![Complex64::new(0.0, 0.0)] } else { half };
        if half[0].im.abs() > HERMITIAN_TOL {
            return Err(Error::HermitianViolation(format!(
                "theta_0 = {} has imaginary part",
                half[0]
            )));
        }
        if half.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let mut half = half;
        half[0].im = 0.0;
        Ok(FourierFunction { half })
    }

    /// From `(k, theta_k)` pairs with Hermitian completion. When both `k`
    /// and `-k` are given they must be conjugate.
    pub fn from_coefficients(pairs: impl IntoIterator<Item = (i64, Complex64)>) -> Result<Self> {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let k_max = pairs.iter().map(|(k, _)| k.unsigned_abs() as usize).max().unwrap_or(0);
        let mut half: Vec<Option<Complex64>> = vec![None; k_max + 1];
        for (k, theta) in pairs {
            let idx = k.unsigned_abs() as usize;
            let value = if k < 0 { theta.conj() } else { theta };
            match half[idx] {
                None => half[idx] = Some(value),
                Some(existing) => {
                    if k == 0 || (existing - value).norm() > HERMITIAN_TOL {
                        let what = if k == 0 { "duplicate theta_0" } else { "theta_{-k} != conj(theta_k)" };
                        return Err(Error::HermitianViolation(format!("{what} at k = {k}")));
                    }
                }
            }
        }
        Self::from_half_spectrum(half.into_iter().map(|c| c.unwrap_or_default()).collect())
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        FourierFunction {
            half: vec![Complex64::new(c, 0.0)],
        }
    }

    /// `amplitude * cos(2 pi k x)`.
    pub fn cosine(k: usize, amplitude: f64) -> Self {
        if k == 0 {
            return Self::constant(amplitude);
        }
        let mut half = vec![Complex64::new(0.0, 0.0); k + 1];
        half[k] = Complex64::new(amplitude / 2.0, 0.0);
        FourierFunction { half }
    }

    /// `amplitude * sin(2 pi k x)`.
    pub fn sine(k: usize, amplitude: f64) -> Self {
        if k == 0 {
            return Self::zero();
        }
        let mut half = vec![Complex64::new(0.0, 0.0); k + 1];
        // Re(theta e_k) = im * sin(2 pi k x) per side.
        half[k] = Complex64::new(0.0, amplitude / 2.0);
        FourierFunction { half }
    }

    /// Highest frequency `K` carried (trailing zeros included).
    pub fn cutoff(&self) -> usize {
        self.half.len() - 1
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k.unsigned_abs() as usize;
        match self.half.get(idx) {
            None => Complex64::new(0.0, 0.0),
            Some(&c) if k < 0 => c.conj(),
            Some(&c) => c,
        }
    }

    pub fn half_spectrum(&self) -> &[Complex64] {
        &self.half
    }

    pub fn is_zero(&self) -> bool {
        self.half.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let len = self.half.len().max(other.half.len());
        let half = (0..len)
            .map(|k| self.half.get(k).copied().unwrap_or_default() + other.half.get(k).copied().unwrap_or_default())
            .collect();
        FourierFunction { half }
    }

    pub fn scaled(&self, a: f64) -> Self {
        FourierFunction {
            half: self.half.iter().map(|c| c * a).collect(),
        }
    }

    /// Splits into `f_K` (frequencies `|k| <= k_cut`) and the tail.
    pub fn split_at(&self, k_cut: usize) -> (Self, Self) {
        let zero = Complex64::new(0.0, 0.0);
        let low: Vec<_> = self.half.iter().take(k_cut + 1).copied().collect();
        let tail: Vec<_> = self
            .half
            .iter()
            .enumerate()
            .map(|(k, &c)| if k <= k_cut { zero } else { c })
            .collect();
        (FourierFunction { half: low }, FourierFunction { half: tail })
    }

    /// `f(t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.sum_terms(|k| 2.0 * PI * (k as f64 * t).fract(), |re, im, phi, _| re * phi.cos() + im * phi.sin())
            .mul_add(2.0, self.half[0].re)
    }

    /// `f(i / n)` with the phase reduced exactly, `k i mod n`.
    pub fn evaluate_at_grid(&self, i: usize, n: usize) -> f64 {
        self.sum_terms(|k| grid_phase(k, i, n), |re, im, phi, _| re * phi.cos() + im * phi.sin())
            .mul_add(2.0, self.half[0].re)
    }

    /// Sums `theta_k e_k(t)` over the full spectrum `-K..=K` and checks the
    /// imaginary residue. Used as an independent check on [`evaluate`](Self::evaluate).
    pub fn evaluate_full(&self, t: f64) -> Result<f64> {
        let k_max = self.cutoff() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for k in -k_max..=k_max {
            let phi = -2.0 * PI * k as f64 * t;
            acc += self.coeff(k) * Complex64::from_polar(1.0, phi);
        }
        if acc.im.abs() > HERMITIAN_TOL * (1.0 + acc.re.abs()) {
            return Err(Error::HermitianViolation(format!("imaginary residue {} at t = {t}", acc.im)));
        }
        Ok(acc.re)
    }

    /// `F_f(t) = int_0^t f`, in closed form.
    pub fn antiderivative(&self, t: f64) -> f64 {
        self.half[0].re * t
            + self.sum_terms(
                |k| 2.0 * PI * (k as f64 * t).fract(),
                |re, im, phi, k| (re * phi.sin() + 2.0 * im * (0.5 * phi).sin().powi(2)) / (PI * k as f64),
            )
    }

    /// `F_f(i / n)` with exact phase reduction.
    pub fn antiderivative_at_grid(&self, i: usize, n: usize) -> f64 {
        self.half[0].re * (i as f64 / n as f64)
            + self.sum_terms(
                |k| grid_phase(k, i, n),
                |re, im, phi, k| (re * phi.sin() + 2.0 * im * (0.5 * phi).sin().powi(2)) / (PI * k as f64),
            )
    }

    /// `int_{(i-1)/n}^{i/n} f`, constant term exact.
    pub fn cell_integral(&self, i: usize, n: usize) -> f64 {
        assert!(i >= 1 && i <= n, "cell index {i} outside 1..={n}");
        let mut osc = 0.0;
        for (k, c) in self.half.iter().enumerate().skip(1) {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let (a, b) = (grid_phase(k, i - 1, n), grid_phase(k, i, n));
            if a == b {
                continue;
            }
            osc += (c.re * (b.sin() - a.sin()) - c.im * (b.cos() - a.cos())) / (PI * k as f64);
        }
        self.half[0].re / n as f64 + osc
    }

    /// `n int_{(i-1)/n}^{i/n} f`; equals `theta_0` exactly for constants.
    pub fn cell_average(&self, i: usize, n: usize) -> f64 {
        assert!(i >= 1 && i <= n, "cell index {i} outside 1..={n}");
        let mut osc = 0.0;
        for (k, c) in self.half.iter().enumerate().skip(1) {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let (a, b) = (grid_phase(k, i - 1, n), grid_phase(k, i, n));
            if a == b {
                continue;
            }
            osc += (c.re * (b.sin() - a.sin()) - c.im * (b.cos() - a.cos())) / (PI * k as f64);
        }
        self.half[0].re + n as f64 * osc
    }

    /// `sum_k (1 + |k|)^{2 beta} |theta_k|^2`.
    pub fn sobolev_norm_sq(&self, beta: f64) -> f64 {
        self.half
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = (1.0 + k as f64).powf(2.0 * beta) * c.norm_sqr();
                if k == 0 {
                    w
                } else {
                    2.0 * w
                }
            })
            .sum()
    }

    /// `sum_k |theta_k|^2 = int_0^1 f^2`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.sobolev_norm_sq(0.0)
    }

    fn sum_terms(&self, phase: impl Fn(usize) -> f64, term: impl Fn(f64, f64, f64, usize) -> f64) -> f64 {
        self.half
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(k, c)| term(c.re, c.im, phase(k), k))
            .sum()
    }

    pub fn to_spec(&self) -> FunctionSpec {
        FunctionSpec {
            coeffs: self
                .half
                .iter()
                .enumerate()
                .filter(|(k, c)| *k == 0 || c.re != 0.0 || c.im != 0.0)
                .map(|(k, c)| (k as i64, c.re, c.im))
                .collect(),
        }
    }

    pub fn from_spec(spec: &FunctionSpec) -> Result<Self> {
        Self::from_coefficients(spec.coeffs.iter().map(|&(k, re, im)| (k, Complex64::new(re, im))))
    }

    /// Parses `{"coeffs": [[k, re, im], ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: FunctionSpec = serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        Self::from_spec(&spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_spec()).expect("function spec serializes")
    }

    /// CSV rows `t,f,F` at `points` equispaced points of `[0, 1]`.
    pub fn to_csv(&self, points: usize) -> String {
        let mut out = String::from("t,f,F\n");
        for t in crate::kernel::unit_grid(points) {
            let _ = writeln!(out, "{t},{},{}", self.evaluate(t), self.antiderivative(t));
        }
        out
    }
}

/// `2 pi (k i mod n) / n`.
fn grid_phase(k: usize, i: usize, n: usize) -> f64 {
    let r = ((k as u128 * i as u128) % n as u128) as f64;
    2.0 * PI * r / n as f64
}

/// JSON form `{"coeffs": [[k, re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub coeffs: Vec<(i64, f64, f64)>,
}

/// A Sobolev ellipsoid `Theta(beta, L)` or a Hölder class `F(alpha, L, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClassSpec {
    Sobolev {
        beta: f64,
        #[serde(rename = "L")]
        l: f64,
    },
    Hoelder {
        alpha: f64,
        #[serde(rename = "L")]
        l: f64,
        /// Sup-norm bound; `None` is unbounded.
        #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
        m: Option<f64>,
    },
}

impl ClassSpec {
    pub fn sobolev(beta: f64, l: f64) -> Result<Self> {
        let spec = ClassSpec::Sobolev { beta, l };
        spec.check()?;
        Ok(spec)
    }

    pub fn hoelder(alpha: f64, l: f64, m: Option<f64>) -> Result<Self> {
        let spec = ClassSpec::Hoelder { alpha, l, m };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        let ok = match *self {
            ClassSpec::Sobolev { beta, l } => positive(beta) && positive(l),
            ClassSpec::Hoelder { alpha, l, m } => positive(alpha) && positive(l) && m.is_none_or(positive),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("class parameters must be positive: {self:?}")))
        }
    }

    /// Whether the smoothness lies in the range the equivalence theorems
    /// cover: `beta > 1/2`, or `alpha` in `(1/2, 1]`. Outside values are
    /// permitted for exploration and should be flagged.
    pub fn in_theorem_range(&self) -> bool {
        match *self {
            ClassSpec::Sobolev { beta, .. } => beta > 0.5,
            ClassSpec::Hoelder { alpha, .. } => alpha > 0.5 && alpha <= 1.0,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            ClassSpec::Sobolev { l, .. } | ClassSpec::Hoelder { l, .. } => l,
        }
    }

    /// Sobolev membership; Hölder membership is only refutable, see
    /// [`hoelder_check`].
    pub fn contains(&self, f: &FourierFunction) -> Option<bool> {
        match *self {
            ClassSpec::Sobolev { beta, l } => Some(f.sobolev_norm_sq(beta) <= l * l),
            ClassSpec::Hoelder { .. } => None,
        }
    }
}

/// Random member of a Sobolev ellipsoid with `|theta_k|` proportional to
/// `U (1 + k)^{-beta - 1/2 - eps}`, random phases, rescaled so that the
/// Sobolev norm squared is `0.95 L^2`.
pub fn sample_ellipsoid(spec: &ClassSpec, k_max: usize, seed: u64) -> Result<FourierFunction> {
    let ClassSpec::Sobolev { beta, l } = *spec else {
        return Err(Error::InvalidArgument("sample_ellipsoid needs a Sobolev class".into()));
    };
    let mut rng = SimRng::new(seed, 0, AUX_STREAM);
    let mut half = Vec::with_capacity(k_max + 1);
    let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
    half.push(Complex64::new(sign * rng.uniform(), 0.0));
    for k in 1..=k_max {
        let modulus = rng.uniform() * (1.0 + k as f64).powf(-beta - 0.5 - ELLIPSOID_EPS);
        let phase = 2.0 * PI * rng.uniform();
        half.push(Complex64::from_polar(modulus, phase));
    }
    let f = FourierFunction { half };
    let norm_sq = f.sobolev_norm_sq(beta);
    if norm_sq == 0.0 {
        return Ok(f);
    }
    Ok(f.scaled((0.95 * l * l / norm_sq).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderReport {
    pub alpha: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: Option<f64>,
    pub grid: usize,
    /// Largest `|f(x) - f(y)| / |x - y|^alpha` over grid pairs.
    pub constant_estimate: f64,
    pub sup_norm_estimate: f64,
    /// True when a grid estimate exceeds its bound, which refutes membership.
    pub refuted: bool,
    pub note: String,
}

/// Grid estimate of the Hölder constant and sup norm over all pairs of a
/// `grid`-point equispaced grid. Both are lower bounds for the suprema.
pub fn hoelder_check(f: &FourierFunction, spec: &ClassSpec, grid: usize) -> Result<HoelderReport> {
    let ClassSpec::Hoelder { alpha, l, m } = *spec else {
        return Err(Error::InvalidArgument("hoelder_check needs a Hölder class".into()));
    };
    if grid < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let values: Vec<f64> = crate::kernel::unit_grid(grid).into_iter().map(|t| f.evaluate(t)).collect();
    let h = 1.0 / (grid - 1) as f64;
    let lag_pow: Vec<f64> = (0..grid).map(|d| (d as f64 * h).powf(alpha)).collect();
    let constant_estimate = (0..grid)
        .into_par_iter()
        .map(|i| {
            let vi = values[i];
            ((i + 1)..grid)
                .map(|j| (values[j] - vi).abs() / lag_pow[j - i])
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    let sup_norm_estimate = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let refuted = constant_estimate > l || m.is_some_and(|m| sup_norm_estimate > m);
    Ok(HoelderReport {
        alpha,
        l,
        m,
        grid,
        constant_estimate,
        sup_norm_estimate,
        refuted,
        note: "grid estimates are lower bounds for the true suprema; membership can be refuted, never certified"
            .into(),
    })
}

//! The RKHS of a triangular kernel.
//!
//! With `psi(K(., t)) = v(t) 1_{[0, q(t)]}` the space is isometric to
//! `L^2([0, T])`, `T = q(1)`. An element `F` corresponds to
//! `g(q(t)) = (F / v)'(t) / q'(t)` and back to `F(t) = v(t) int_0^{q(t)} g`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{NoiseSampler, PathGrid, PathSample};
use crate::fourier::FourierFunction;
use crate::kernel::{unit_grid, GaussMarkovKernel};
use crate::quadrature::{integrate, integrate_with};

/// Bisection steps of the inverse time change.
pub const BISECTION_STEPS: usize = 60;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    FromF(FourierFunction),
    FromG(RealFn),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    FromF,
    FromG,
}

/// `F` in the RKHS, stored through its regression function or its
/// `psi`-image `g`.
#[derive(Clone)]
pub struct RkhsElement {
    kernel: GaussMarkovKernel,
    repr: Repr,
}

impl fmt::Debug for RkhsElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RkhsElement")
            .field("kernel", &self.kernel.name())
            .field("representation", &self.representation())
            .finish()
    }
}

fn check_regular(kernel: &GaussMarkovKernel) -> Result<()> {
    for t in unit_grid(crate::kernel::DEFAULT_VALIDATION_GRID) {
        if t < 1.0 && !(kernel.v(t) > 0.0) {
            return Err(Error::KernelDegenerate(format!("v({t}) = {} is not positive", kernel.v(t))));
        }
        let d = kernel.q_prime(t);
        if !(d > 0.0) {
            return Err(Error::KernelDegenerate(format!("q'({t}) = {d} is not positive")));
        }
    }
    Ok(())
}

/// `g(q(t)) = [f(t) v(t) - v'(t) F_f(t)] / [v(t)^2 q'(t)]`.
fn g_at_time(kernel: &GaussMarkovKernel, f: &FourierFunction, t: f64) -> f64 {
    let v = kernel.v(t);
    (f.evaluate(t) * v - kernel.v_prime(t) * f.antiderivative(t)) / (v * v * kernel.q_prime(t))
}

/// `psi`-image of `F_f`.
pub fn g_from_f(kernel: &GaussMarkovKernel, f: &FourierFunction) -> Result<RkhsElement> {
    check_regular(kernel)?;
    Ok(RkhsElement {
        kernel: kernel.clone(),
        repr: Repr::FromF(f.clone()),
    })
}

impl RkhsElement {
    /// Element with prescribed `g` on `[0, T]`; needs a finite horizon.
    pub fn from_g(kernel: &GaussMarkovKernel, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        kernel.require_v1_nonzero()?;
        check_regular(kernel)?;
        Ok(RkhsElement {
            kernel: kernel.clone(),
            repr: Repr::FromG(Arc::new(g)),
        })
    }

    pub fn kernel(&self) -> &GaussMarkovKernel {
        &self.kernel
    }

    pub fn representation(&self) -> Representation {
        match self.repr {
            Repr::FromF(_) => Representation::FromF,
            Repr::FromG(_) => Representation::FromG,
        }
    }

    /// `g(q(t))`.
    pub fn g_at_time(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::FromF(f) => g_at_time(&self.kernel, f, t),
            Repr::FromG(g) => g(self.kernel.q(t)),
        }
    }

    /// `g(s)` for `s` in `[0, T]`.
    pub fn g(&self, s: f64) -> Result<f64> {
        match &self.repr {
            Repr::FromG(g) => Ok(g(s)),
            Repr::FromF(_) => Ok(self.g_at_time(inverse_time_change(&self.kernel, s)?)),
        }
    }

    /// `F(t) = v(t) int_0^{q(t)} g`.
    pub fn value(&self, t: f64) -> Result<f64> {
        match &self.repr {
            Repr::FromF(f) => Ok(f.antiderivative(t)),
            Repr::FromG(g) => {
                let g = g.clone();
                let q = if t == 0.0 { 0.0 } else { self.kernel.q(t) };
                Ok(self.kernel.v(t) * integrate_with(move |s| g(s), 0.0, q, 1e-12, 1e-15)?)
            }
        }
    }

    /// `||F||_H = ||g||_{L^2([0, T])}`.
    pub fn norm(&self) -> Result<f64> {
        let sq = match &self.repr {
            // Substituting s = q(t) keeps the integral on [0, 1].
            Repr::FromF(_) => integrate(|t| self.g_at_time(t).powi(2) * self.kernel.q_prime(t), 0.0, 1.0)?,
            Repr::FromG(g) => {
                let g = g.clone();
                integrate(move |s| g(s).powi(2), 0.0, self.kernel.horizon())?
            }
        };
        Ok(sq.max(0.0).sqrt())
    }
}

pub fn rkhs_norm(elem: &RkhsElement) -> Result<f64> {
    elem.norm()
}

/// `t` with `q(t) = s`, by bisection.
pub fn inverse_time_change(kernel: &GaussMarkovKernel, s: f64) -> Result<f64> {
    let top = kernel.q(1.0);
    if !(s >= 0.0 && s <= top) {
        return Err(Error::InvalidArgument(format!("{s} is outside [0, q(1)] = [0, {top}]")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if kernel.q(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Step function `sum_j c_j v(t_j) 1_{[0, q(t_j)]}`: the `psi`-image of
/// `sum_j c_j K(., t_j)`.
pub fn psi_of_span(kernel: &GaussMarkovKernel, coeffs: &[f64], points: &[f64]) -> impl Fn(f64) -> f64 {
    let steps: Vec<(f64, f64)> = coeffs
        .iter()
        .zip(points)
        .map(|(&c, &t)| (kernel.q(t), c * kernel.v(t)))
        .collect();
    move |s| steps.iter().filter(|(q, _)| s <= *q).map(|(_, h)| h).sum()
}

/// Squared RKHS distance from `F_f` to `span{K(., t_j) : j = 1..n}`.
///
/// In `psi`-coordinates the span consists of step functions on the
/// partition `q(t_0) < ... < q(t_n)`, so the optimum is the cellwise mean
/// `alpha_j = Delta(F/v)_j / Delta q_j` of `g` and
/// `D_n = sum_j int_{cell j} (g(q) - alpha_j)^2 q'`.
pub fn projection_distance(kernel: &GaussMarkovKernel, f: &FourierFunction, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    check_regular(kernel)?;
    if !kernel.v1_nonzero() {
        return Err(Error::KernelDegenerate("v(1) = 0: the last cell has infinite q-length".into()));
    }
    let nf = n as f64;
    let mut prev_q = 0.0;
    let mut total = 0.0;
    let h = |t: f64| g_at_time(kernel, f, t);
    for j in 1..=n {
        let (a, b) = ((j - 1) as f64 / nf, j as f64 / nf);
        let q = kernel.q(b);
        let dq = q - prev_q;
        if !(dq > 0.0) {
            return Err(Error::DegenerateCell { cell: j, increment: dq });
        }
        // Mean taken relative to a reference value so that a constant g
        // gives alpha equal to that constant bit for bit.
        let href = h(0.5 * (a + b));
        let abs = 1e-13 * dq * (1.0 + href.abs());
        let shift = integrate_with(|t| (h(t) - href) * kernel.q_prime(t), a, b, crate::quadrature::REL_TOL, abs)?;
        let alpha = href + shift / dq;
        let cell = integrate_with(
            |t| {
                let d = h(t) - alpha;
                d * d * kernel.q_prime(t)
            },
            a,
            b,
            crate::quadrature::REL_TOL,
            0.0,
        )?;
        total += cell;
        prev_q = q;
    }
    Ok(total)
}

/// Kriging interpolation through the design points `t_j = j / n`.
///
/// With `Xi_t = v(t) W_{q(t)}` the conditional mean given the knots is
/// `v(t)` times linear interpolation, in `q`, of `y_j / v(t_j)` between the
/// neighbouring knots (the origin counts as a knot with value zero).
#[derive(Debug, Clone)]
pub struct KrigingInterpolator {
    kernel: GaussMarkovKernel,
    n: usize,
    t: Vec<f64>,
    q: Vec<f64>,
    v: Vec<f64>,
}

impl KrigingInterpolator {
    pub fn new(kernel: &GaussMarkovKernel, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        kernel.require_v1_nonzero()?;
        let t = crate::kernel::design_points(n);
        let mut q = Vec::with_capacity(n + 1);
        let mut v = Vec::with_capacity(n + 1);
        for (j, &tj) in t.iter().enumerate() {
            let vj = kernel.v(tj);
            if j > 0 && !(vj != 0.0 && vj.is_finite()) {
                return Err(Error::SingularCovariance(format!("v(t_{j}) = {vj}")));
            }
            q.push(if j == 0 { 0.0 } else { kernel.q(tj) });
            v.push(vj);
        }
        Ok(KrigingInterpolator {
            kernel: kernel.clone(),
            n,
            t,
            q,
            v,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, y: &[f64], t: f64) -> Result<()> {
        if y.len() != self.n {
            return Err(Error::GridMismatch(format!("expected {} knot values, got {}", self.n, y.len())));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("{t} is outside [0, 1]")));
        }
        Ok(())
    }

    /// `I(t | y)` in closed form, `O(log n)` per point.
    pub fn interpolate(&self, y: &[f64], t: f64) -> Result<f64> {
        self.check(y, t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let n = self.n;
        let mut j = ((t * n as f64).ceil() as usize).clamp(1, n);
        while j < n && t > self.t[j] {
            j += 1;
        }
        while j > 1 && t <= self.t[j - 1] {
            j -= 1;
        }
        if t == self.t[j] {
            return Ok(y[j - 1]);
        }
        let z_left = if j == 1 { 0.0 } else { y[j - 2] / self.v[j - 1] };
        let z_right = y[j - 1] / self.v[j];
        let lambda = (self.kernel.q(t) - self.q[j - 1]) / (self.q[j] - self.q[j - 1]);
        Ok(self.kernel.v(t) * ((1.0 - lambda) * z_left + lambda * z_right))
    }

    /// Weights `C^{-1} y` from the tridiagonal precision of the knot
    /// covariance `C = D M D`, `D = diag(v(t_j))`, `M = [q(min(t_i, t_j))]`.
    pub fn weights(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.n {
            return Err(Error::GridMismatch(format!("expected {} knot values, got {}", self.n, y.len())));
        }
        let n = self.n;
        let x: Vec<f64> = (0..n).map(|k| y[k] / self.v[k + 1]).collect();
        let delta: Vec<f64> = (1..=n).map(|k| self.q[k] - self.q[k - 1]).collect();
        let mut w = vec![0.0; n];
        for k in 0..n {
            let mut p = x[k] / delta[k];
            if k > 0 {
                p -= x[k - 1] / delta[k];
            }
            if k + 1 < n {
                p += (x[k] - x[k + 1]) / delta[k + 1];
            }
            w[k] = p / self.v[k + 1];
        }
        Ok(w)
    }

    /// `I(t | y) = k(t)^T C^{-1} y` through [`weights`](Self::weights).
    pub fn interpolate_tridiagonal(&self, y: &[f64], t: f64) -> Result<f64> {
        self.check(y, t)?;
        let w = self.weights(y)?;
        let mut acc = 0.0;
        for (j, wj) in w.iter().enumerate() {
            acc += self.kernel.covariance(t, self.t[j + 1])? * wj;
        }
        Ok(acc)
    }

    /// `I(t | y)` at every point.
    pub fn curve(&self, y: &[f64], points: &[f64]) -> Result<Vec<f64>> {
        points.iter().map(|&t| self.interpolate(y, t)).collect()
    }
}

/// `I(t | y)` for knot values `y_j` at `j / n`, `n = y.len()`.
pub fn kriging_interpolate(kernel: &GaussMarkovKernel, y: &[f64], t: f64) -> Result<f64> {
    KrigingInterpolator::new(kernel, y.len())?.interpolate(y, t)
}

/// `R = Xi' - I(. | Xi'(t_1..t_n))` on the grid, for path `path_index`.
pub(crate) fn residual_on_grid(
    kernel: &GaussMarkovKernel,
    interp: &KrigingInterpolator,
    grid: &PathGrid,
    seed: u64,
    path_index: u64,
) -> Result<Vec<f64>> {
    let sampler = NoiseSampler::on_path_grid(kernel, grid)?;
    residual_from_noise(interp, grid, &sampler.sample(seed, path_index))
}

fn residual_from_noise(interp: &KrigingInterpolator, grid: &PathGrid, xi: &[f64]) -> Result<Vec<f64>> {
    let knots: Vec<f64> = grid.knots[1..].iter().map(|&k| xi[k]).collect();
    let fit = interp.curve(&knots, &grid.points)?;
    Ok(xi.iter().zip(fit).map(|(x, i)| x - i).collect())
}

/// Kriging residual of an independent noise copy on a `density * n + 1`
/// grid; zero at every design point.
pub fn kriging_residual_process(kernel: &GaussMarkovKernel, n: usize, seed: u64, density: usize) -> Result<PathSample> {
    let mut batch = kriging_residual_batch(kernel, n, seed, 1, density)?;
    Ok(batch.remove(0))
}

/// Paths `0..count` of the Kriging residual process.
pub fn kriging_residual_batch(
    kernel: &GaussMarkovKernel,
    n: usize,
    seed: u64,
    count: usize,
    density: usize,
) -> Result<Vec<PathSample>> {
    use rayon::prelude::*;
    let interp = KrigingInterpolator::new(kernel, n)?;
    let grid = PathGrid::with_density(n, density)?;
    let sampler = NoiseSampler::on_path_grid(kernel, &grid)?;
    (0..count as u64)
        .into_par_iter()
        .map(|p| {
            let values = residual_from_noise(&interp, &grid, &sampler.sample(seed, p))?;
            Ok(PathSample {
                grid: grid.points.clone(),
                values,
                n,
                kernel: kernel.name().to_string(),
                function: "kriging_residual".into(),
                seed,
            })
        })
        .collect()
}

/// `||sum_j c_j K(., t_j)||_H^2 = c^T G c` from the Gram matrix.
pub fn span_norm_sq(kernel: &GaussMarkovKernel, coeffs: &[f64], points: &[f64]) -> Result<f64> {
    let g = kernel.gram_matrix(points)?;
    let c = DVector::from_column_slice(coeffs);
    Ok((c.transpose() * g * &c)[(0, 0)])
}

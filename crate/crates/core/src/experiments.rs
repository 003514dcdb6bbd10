//! Simulation of the discrete regression experiment, its cell-averaged
//! variant, the continuous-path experiment on a fine grid, and the Kriging
//! path, together with the maps between them.
//!
//! For kernels with `v(1) != 0` the noise is drawn through the time change
//! `Xi_t = v(t) W_{q(t)}`: Brownian values at the design points come first
//! from one substream, then the remaining grid points are filled by Brownian
//! bridges in `q`-coordinates from a second substream. The design-point
//! values therefore agree across [`simulate_increments`], [`simulate_e2`] and
//! [`kriging_path_experiment`] for the same seed. Kernels with `v(1) = 0` are
//! sampled by a dense Cholesky factor of the exact covariance.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::FourierFunction;
use crate::kernel::{design_points, GaussMarkovKernel};
use crate::rkhs::KrigingInterpolator;
use crate::rng::{SimRng, FILL_STREAM, KNOT_STREAM};

/// Fine-grid points per design cell.
pub const DEFAULT_GRID_DENSITY: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `Y_i = f(t_i) + sqrt(n) xi_i`.
    Original,
    /// `Y'_i = n int_{cell} f + sqrt(n) xi_i`.
    CellAveraged,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::CellAveraged => "cell_averaged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSample {
    pub n: usize,
    pub values: Vec<f64>,
    pub variant: Variant,
    pub kernel: String,
    pub function: String,
    pub seed: u64,
}

impl DiscreteSample {
    /// `# key=value` metadata, then `i,t,value` rows for `i = 1..=n`.
    pub fn to_csv(&self, extra_meta: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# kernel={}, n={}, seed={}, variant={}",
            self.kernel,
            self.n,
            self.seed,
            self.variant.name()
        );
        let _ = writeln!(out, "# function={}", self.function);
        for line in extra_meta {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("i,t,value\n");
        for (i, y) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, (i + 1) as f64 / self.n as f64, y);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Number of design cells; the noise is scaled by `1 / sqrt(n)`.
    pub n: usize,
    pub kernel: String,
    pub function: String,
    pub seed: u64,
}

impl PathSample {
    pub fn to_csv(&self, extra_meta: &[String]) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# kernel={}, n={}, seed={}, grid_size={}",
            self.kernel,
            self.n,
            self.seed,
            self.grid.len()
        );
        let _ = writeln!(out, "# function={}", self.function);
        for line in extra_meta {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str("i,t,value\n");
        for (i, (t, y)) in self.grid.iter().zip(&self.values).enumerate() {
            let _ = writeln!(out, "{i},{t},{y}");
        }
        out
    }

    /// Indices of the design points `j / n`, `j = 0..=n`, in the grid.
    pub fn knot_indices(&self) -> Result<Vec<usize>> {
        knot_indices(&self.grid, self.n)
    }
}

fn knot_indices(grid: &[f64], n: usize) -> Result<Vec<usize>> {
    let m = grid.len();
    if n == 0 || m < n + 1 || !(m - 1).is_multiple_of(n) {
        return Err(Error::GridMismatch(format!(
            "a {m}-point grid cannot contain the design points j/{n}"
        )));
    }
    let stride = (m - 1) / n;
    let idx: Vec<usize> = (0..=n).map(|j| j * stride).collect();
    for (j, &i) in idx.iter().enumerate() {
        if grid[i] != j as f64 / n as f64 {
            return Err(Error::GridMismatch(format!(
                "grid point {i} is {} but the design point is {j}/{n}",
                grid[i]
            )));
        }
    }
    Ok(idx)
}

/// Equispaced fine grid `k / (m - 1)` containing the design points of `n`
/// cells bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGrid {
    pub points: Vec<f64>,
    /// `knots[j]` is the index of `j / n`.
    pub knots: Vec<usize>,
    pub n: usize,
}

impl PathGrid {
    /// `grid_size` points; `grid_size - 1` must be a multiple of `n`.
    pub fn new(n: usize, grid_size: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be at least 1".into()));
        }
        if grid_size < n + 1 || !(grid_size - 1).is_multiple_of(n) {
            return Err(Error::GridMismatch(format!(
                "grid_size {grid_size} must be at least n + 1 = {} with grid_size - 1 a multiple of n",
                n + 1
            )));
        }
        let points = crate::kernel::unit_grid(grid_size);
        let knots = knot_indices(&points, n)?;
        Ok(PathGrid { points, knots, n })
    }

    /// `density * n + 1` points.
    pub fn with_density(n: usize, density: usize) -> Result<Self> {
        if density == 0 {
            return Err(Error::InvalidArgument("grid density must be at least 1".into()));
        }
        Self::new(n, density * n + 1)
    }

    pub fn knot_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.points.len()];
        for &k in &self.knots {
            mask[k] = true;
        }
        mask
    }
}

#[derive(Debug, Clone)]
struct KnotStep {
    index: usize,
    prev: Option<usize>,
    sd: f64,
}

#[derive(Debug, Clone)]
struct FillStep {
    index: usize,
    left: Option<usize>,
    right: Option<usize>,
    right_weight: f64,
    sd: f64,
}

#[derive(Debug, Clone)]
enum Method {
    TimeChange {
        v: Vec<f64>,
        knots: Vec<KnotStep>,
        fill: Vec<FillStep>,
    },
    Cholesky {
        active: Vec<usize>,
        lower: DMatrix<f64>,
    },
}

/// Exact sampler of `(Xi_t)` at fixed points.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    len: usize,
    method: Method,
}

impl NoiseSampler {
    /// `points` strictly increasing in `[0, 1]`; `knot_mask` marks the points
    /// drawn from the knot substream.
    pub fn new(kernel: &GaussMarkovKernel, points: &[f64], knot_mask: &[bool]) -> Result<Self> {
        if points.len() != knot_mask.len() {
            return Err(Error::InvalidArgument("points and knot mask differ in length".into()));
        }
        if points.iter().any(|t| !(0.0..=1.0).contains(t)) || points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("points must increase strictly within [0, 1]".into()));
        }
        let method = if kernel.v1_nonzero() {
            Self::time_change_plan(kernel, points, knot_mask)
        } else {
            Self::cholesky_plan(kernel, points)?
        };
        Ok(NoiseSampler {
            len: points.len(),
            method,
        })
    }

    /// Sampler on the design points `j / n`, all treated as knots.
    pub fn on_design_points(kernel: &GaussMarkovKernel, n: usize) -> Result<Self> {
        let pts = design_points(n);
        Self::new(kernel, &pts, &vec![true; pts.len()])
    }

    pub fn on_path_grid(kernel: &GaussMarkovKernel, grid: &PathGrid) -> Result<Self> {
        Self::new(kernel, &grid.points, &grid.knot_mask())
    }

    fn time_change_plan(kernel: &GaussMarkovKernel, points: &[f64], knot_mask: &[bool]) -> Method {
        // The origin is pinned: W_0 = 0 and Xi_0 = 0.
        let q: Vec<f64> = points.iter().map(|&t| if t == 0.0 { 0.0 } else { kernel.q(t) }).collect();
        let v: Vec<f64> = points.iter().map(|&t| kernel.v(t)).collect();
        let qi = |i: Option<usize>| i.map_or(0.0, |i| q[i]);

        let mut knots = Vec::new();
        let mut prev = None;
        for i in (0..points.len()).filter(|&i| knot_mask[i]) {
            let sd = (q[i] - qi(prev)).max(0.0).sqrt();
            knots.push(KnotStep { index: i, prev, sd });
            prev = Some(i);
        }

        let mut next_knot = vec![None; points.len()];
        let mut upcoming = None;
        for i in (0..points.len()).rev() {
            next_knot[i] = upcoming;
            if knot_mask[i] {
                upcoming = Some(i);
            }
        }
        let mut fill = Vec::new();
        for i in (0..points.len()).filter(|&i| !knot_mask[i]) {
            let left = i.checked_sub(1);
            let right = next_knot[i];
            let (ql, qt) = (qi(left), q[i]);
            let (right_weight, var) = match right {
                Some(r) => {
                    let span = q[r] - ql;
                    if span > 0.0 {
                        ((qt - ql) / span, (qt - ql) * (q[r] - qt) / span)
                    } else {
                        (0.0, 0.0)
                    }
                }
                None => (0.0, qt - ql),
            };
            fill.push(FillStep {
                index: i,
                left,
                right,
                right_weight,
                sd: var.max(0.0).sqrt(),
            });
        }
        Method::TimeChange { v, knots, fill }
    }

    fn cholesky_plan(kernel: &GaussMarkovKernel, points: &[f64]) -> Result<Method> {
        let mut active = Vec::new();
        for (i, &t) in points.iter().enumerate() {
            if kernel.covariance(t, t)? > 0.0 {
                active.push(i);
            }
        }
        let pts: Vec<f64> = active.iter().map(|&i| points[i]).collect();
        let gram = kernel.gram_matrix(&pts)?;
        let lower = gram
            .cholesky()
            .ok_or_else(|| Error::SingularCovariance(format!("covariance of `{}` is not positive definite", kernel.name())))?
            .l();
        Ok(Method::Cholesky { active, lower })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// One path, determined by `(seed, path_index)`.
    pub fn sample(&self, seed: u64, path_index: u64) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        match &self.method {
            Method::TimeChange { v, knots, fill } => {
                let mut w = vec![0.0; self.len];
                let mut rng = SimRng::new(seed, path_index, KNOT_STREAM);
                for step in knots {
                    let base = step.prev.map_or(0.0, |p| w[p]);
                    w[step.index] = if step.sd > 0.0 { base + step.sd * rng.normal() } else { base };
                }
                let mut rng = SimRng::new(seed, path_index, FILL_STREAM);
                for step in fill {
                    let wl = step.left.map_or(0.0, |l| w[l]);
                    let wr = step.right.map_or(0.0, |r| w[r]);
                    let mean = wl + step.right_weight * (wr - wl);
                    w[step.index] = if step.sd > 0.0 { mean + step.sd * rng.normal() } else { mean };
                }
                for i in 0..self.len {
                    out[i] = if w[i] == 0.0 { 0.0 } else { v[i] * w[i] };
                }
            }
            Method::Cholesky { active, lower } => {
                let mut rng = SimRng::new(seed, path_index, KNOT_STREAM);
                let z = DVector::from_fn(active.len(), |_, _| rng.normal());
                let x = lower * z;
                for (k, &i) in active.iter().enumerate() {
                    out[i] = x[k];
                }
            }
        }
        out
    }

    /// Paths `0..count`, identical regardless of thread count.
    pub fn sample_batch(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        (0..count as u64).into_par_iter().map(|p| self.sample(seed, p)).collect()
    }
}

/// `xi_i = Xi_{t_i} - Xi_{t_{i-1}}`, `i = 1..=n`.
pub fn simulate_increments(kernel: &GaussMarkovKernel, n: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_increments_path(kernel, n, seed, 0)
}

/// As [`simulate_increments`] for path `path_index` of a batch.
pub fn simulate_increments_path(kernel: &GaussMarkovKernel, n: usize, seed: u64, path_index: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let xi = NoiseSampler::on_design_points(kernel, n)?.sample(seed, path_index);
    Ok(xi.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Signal part of the discrete experiment: `f(t_i)` or the cell averages.
pub fn e1_mean(f: &FourierFunction, n: usize, variant: Variant) -> Vec<f64> {
    (1..=n)
        .map(|i| match variant {
            Variant::Original => f.evaluate_at_grid(i, n),
            Variant::CellAveraged => f.cell_average(i, n),
        })
        .collect()
}

pub fn simulate_e1(
    kernel: &GaussMarkovKernel,
    f: &FourierFunction,
    n: usize,
    seed: u64,
    variant: Variant,
) -> Result<DiscreteSample> {
    let xi = simulate_increments(kernel, n, seed)?;
    let scale = (n as f64).sqrt();
    let values = e1_mean(f, n, variant)
        .into_iter()
        .zip(xi)
        .map(|(m, x)| m + scale * x)
        .collect();
    Ok(DiscreteSample {
        n,
        values,
        variant,
        kernel: kernel.name().to_string(),
        function: f.to_json(),
        seed,
    })
}

/// `Y_t = F_f(t) + Xi_t / sqrt(n)` on a `grid_size`-point grid.
pub fn simulate_e2(
    kernel: &GaussMarkovKernel,
    f: &FourierFunction,
    n: usize,
    seed: u64,
    grid_size: usize,
) -> Result<PathSample> {
    let mut batch = simulate_e2_batch(kernel, f, n, seed, grid_size, 1)?;
    Ok(batch.remove(0))
}

/// Paths `0..count` of [`simulate_e2`] sharing one sampler; path 0 equals
/// `simulate_e2` with the same seed.
pub fn simulate_e2_batch(
    kernel: &GaussMarkovKernel,
    f: &FourierFunction,
    n: usize,
    seed: u64,
    grid_size: usize,
    count: usize,
) -> Result<Vec<PathSample>> {
    let grid = PathGrid::new(n, grid_size)?;
    let sampler = NoiseSampler::on_path_grid(kernel, &grid)?;
    let m = grid.points.len() - 1;
    let signal: Vec<f64> = (0..=m).map(|k| f.antiderivative_at_grid(k, m)).collect();
    let scale = 1.0 / (n as f64).sqrt();
    let function = f.to_json();
    Ok(sampler
        .sample_batch(seed, count)
        .into_iter()
        .map(|xi| PathSample {
            grid: grid.points.clone(),
            values: signal.iter().zip(&xi).map(|(s, x)| s + scale * x).collect(),
            n,
            kernel: kernel.name().to_string(),
            function: function.clone(),
            seed,
        })
        .collect())
}

/// `Y~_t = I(t | F_f(t_1), ..., F_f(t_n)) + Xi_t / sqrt(n)`.
pub fn kriging_path_experiment(
    kernel: &GaussMarkovKernel,
    f: &FourierFunction,
    n: usize,
    seed: u64,
    grid_size: usize,
) -> Result<PathSample> {
    let interp = KrigingInterpolator::new(kernel, n)?;
    let grid = PathGrid::new(n, grid_size)?;
    let xi = NoiseSampler::on_path_grid(kernel, &grid)?.sample(seed, 0);
    let knot_values: Vec<f64> = (1..=n).map(|j| f.antiderivative_at_grid(j, n)).collect();
    let signal = interp.curve(&knot_values, &grid.points)?;
    let scale = 1.0 / (n as f64).sqrt();
    let values = signal.iter().zip(&xi).map(|(s, x)| s + scale * x).collect();
    Ok(PathSample {
        grid: grid.points,
        values,
        n,
        kernel: kernel.name().to_string(),
        function: f.to_json(),
        seed,
    })
}

/// `Y'_i = n (Y~_{t_i} - Y~_{t_{i-1}})`.
pub fn reconstruct_discrete_from_path(path: &PathSample, n: usize) -> Result<DiscreteSample> {
    if path.grid.len() != path.values.len() {
        return Err(Error::GridMismatch("grid and values differ in length".into()));
    }
    let idx = knot_indices(&path.grid, n)?;
    let nf = n as f64;
    let values = idx.windows(2).map(|w| nf * (path.values[w[1]] - path.values[w[0]])).collect();
    Ok(DiscreteSample {
        n,
        values,
        variant: Variant::CellAveraged,
        kernel: path.kernel.clone(),
        function: path.function.clone(),
        seed: path.seed,
    })
}

/// Kriging path built from a cell-averaged sample:
/// `Y~_t = I(t | S'/n) + R_t / sqrt(n)` with partial sums `S'_k` and an
/// independent Kriging residual `R` drawn from `residual_seed`.
pub fn path_from_discrete(
    kernel: &GaussMarkovKernel,
    sample: &DiscreteSample,
    grid_density: usize,
    residual_seed: u64,
) -> Result<PathSample> {
    let n = sample.n;
    if sample.values.len() != n {
        return Err(Error::GridMismatch("sample length differs from n".into()));
    }
    let interp = KrigingInterpolator::new(kernel, n)?;
    let grid = PathGrid::with_density(n, grid_density)?;
    let nf = n as f64;
    let mut partial = 0.0;
    let knot_values: Vec<f64> = sample
        .values
        .iter()
        .map(|y| {
            partial += y;
            partial / nf
        })
        .collect();
    let residual = crate::rkhs::residual_on_grid(kernel, &interp, &grid, residual_seed, 0)?;
    let signal = interp.curve(&knot_values, &grid.points)?;
    let scale = 1.0 / nf.sqrt();
    let values = signal.iter().zip(&residual).map(|(s, r)| s + scale * r).collect();
    Ok(PathSample {
        grid: grid.points,
        values,
        n,
        kernel: kernel.name().to_string(),
        function: sample.function.clone(),
        seed: sample.seed,
    })
}

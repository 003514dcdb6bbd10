//! Triangular covariance kernels `K(s, t) = u(min(s,t)) v(max(s,t))` of
//! Gauss-Markov processes started at zero, together with the time change
//! `q = u / v` that represents the process as `v(t) W_{q(t)}`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_kernel_expression, BinOp, Expr};

/// Step of the central differences used for custom kernels.
pub const FD_STEP: f64 = 1e-6;

/// Default number of points of the validation grid.
pub const DEFAULT_VALIDATION_GRID: usize = 1001;

const ORIGIN_TOL: f64 = 1e-10;

/// Built-in kernels with analytic `u`, `v`, `q`, `q'` and `v'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `u(t) = t`, `v = 1`.
    BrownianMotion,
    /// Ornstein-Uhlenbeck process conditioned on starting at zero:
    /// `u(t) = e^{Lt} - e^{-Lt}`, `v(t) = e^{-Lt}`, `q(t) = e^{2Lt} - 1`.
    OrnsteinUhlenbeck { rate: f64 },
    /// `u(t) = t`, `v(t) = 1 - t`. Constructible but flagged since `v(1) = 0`.
    BrownianBridge,
    /// Slepian's conditioned stationary process: `u(t) = t`, `v(t) = 2 - t`.
    Slepian,
}

impl Preset {
    pub fn name(&self) -> String {
        match self {
            Preset::BrownianMotion => "bm".into(),
            Preset::OrnsteinUhlenbeck { rate } => format!("ou(L={rate})"),
            Preset::BrownianBridge => "bridge".into(),
            Preset::Slepian => "slepian".into(),
        }
    }

    /// Parses `bm`, `ou`, `ou(2)`, `ou:2`, `bridge` and `slepian`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        let preset = match name {
            "bm" | "brownian" => Preset::BrownianMotion,
            "ou" => Preset::OrnsteinUhlenbeck { rate: 1.0 },
            "bridge" => Preset::BrownianBridge,
            "slepian" => Preset::Slepian,
            other => {
                let rate = other
                    .strip_prefix("ou(")
                    .and_then(|r| r.strip_suffix(')'))
                    .or_else(|| other.strip_prefix("ou:"))
                    .map(|r| r.trim_start_matches("L=").parse::<f64>());
                match rate {
                    Some(Ok(rate)) => Preset::OrnsteinUhlenbeck { rate },
                    _ => return Err(Error::InvalidSpec(format!("unknown preset `{other}`"))),
                }
            }
        };
        Ok(preset)
    }
}

/// JSON form of a kernel: either `{"name", "u", "v"}` with expression
/// strings or `{"preset", "params"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Custom {
        name: String,
        u: String,
        v: String,
    },
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        params: Option<PresetParams>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetParams {
    #[serde(rename = "L")]
    pub rate: f64,
}

impl KernelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel spec serializes")
    }

    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::OrnsteinUhlenbeck { rate } => KernelSpec::Preset {
                preset: "ou".into(),
                params: Some(PresetParams { rate }),
            },
            other => KernelSpec::Preset {
                preset: other.name(),
                params: None,
            },
        }
    }
}

#[derive(Debug, Clone)]
enum Form {
    Preset(Preset),
    Custom { u: Expr, v: Expr },
}

/// Validity flags recorded at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelFlags {
    pub v_positive_on_closed_interval: bool,
    pub v1_nonzero: bool,
    pub q_prime_bounded_away_from_zero: bool,
}

/// A Gauss-Markov kernel `K(s,t) = u(s) v(t)`, `s <= t`, on `[0, 1]`.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct GaussMarkovKernel {
    name: String,
    form: Form,
    horizon: f64,
    flags: KernelFlags,
}

impl GaussMarkovKernel {
    pub fn preset(preset: Preset) -> Result<Self> {
        if let Preset::OrnsteinUhlenbeck { rate } = preset {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::InvalidSpec(format!("OU rate must be positive, got {rate}")));
            }
        }
        Self::build(preset.name(), Form::Preset(preset))
    }

    pub fn bm() -> Self {
        Self::preset(Preset::BrownianMotion).expect("bm is valid")
    }

    pub fn ou(rate: f64) -> Result<Self> {
        Self::preset(Preset::OrnsteinUhlenbeck { rate })
    }

    pub fn bridge() -> Self {
        Self::preset(Preset::BrownianBridge).expect("bridge is constructible")
    }

    pub fn slepian() -> Self {
        Self::preset(Preset::Slepian).expect("slepian is valid")
    }

    /// Kernel from expression sources for `u` and `v`. Derivatives use
    /// central differences with step [`FD_STEP`].
    pub fn custom(name: &str, u_src: &str, v_src: &str) -> Result<Self> {
        let u = parse_kernel_expression(u_src)?;
        let v = parse_kernel_expression(v_src)?;
        Self::from_exprs(name, u, v)
    }

    pub fn from_exprs(name: &str, u: Expr, v: Expr) -> Result<Self> {
        Self::build(name.to_string(), Form::Custom { u, v })
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Custom { name, u, v } => Self::custom(name, u, v),
            KernelSpec::Preset { preset, params } => {
                let mut p = Preset::parse(preset)?;
                match (&mut p, params) {
                    (Preset::OrnsteinUhlenbeck { rate }, Some(params)) => *rate = params.rate,
                    (_, None) => {}
                    (other, Some(_)) => {
                        return Err(Error::InvalidSpec(format!(
                            "preset `{}` takes no parameters",
                            other.name()
                        )))
                    }
                }
                Self::preset(p)
            }
        }
    }

    pub fn spec(&self) -> KernelSpec {
        match &self.form {
            Form::Preset(p) => KernelSpec::preset(*p),
            Form::Custom { u, v } => KernelSpec::Custom {
                name: self.name.clone(),
                u: u.to_string(),
                v: v.to_string(),
            },
        }
    }

    fn build(name: String, form: Form) -> Result<Self> {
        let mut kernel = GaussMarkovKernel {
            name,
            form,
            horizon: f64::NAN,
            flags: KernelFlags {
                v_positive_on_closed_interval: false,
                v1_nonzero: false,
                q_prime_bounded_away_from_zero: false,
            },
        };
        let grid = unit_grid(DEFAULT_VALIDATION_GRID);
        let mut min_v = f64::INFINITY;
        let mut prev_q = f64::NEG_INFINITY;
        for (i, &t) in grid.iter().enumerate() {
            let u = kernel.try_u(t)?;
            let v = kernel.try_v(t)?;
            let uv = u * v;
            if uv < 0.0 {
                return Err(Error::AssumptionViolation(format!(
                    "u(t)v(t) = {uv:e} < 0 at t = {t}"
                )));
            }
            let interior = i > 0 && i + 1 < grid.len();
            if interior && uv <= 0.0 {
                return Err(Error::AssumptionViolation(format!(
                    "process degenerate at interior point t = {t} (u v = 0)"
                )));
            }
            min_v = min_v.min(v);
            let q = kernel.q(t);
            if i == 0 && !(q.abs() <= ORIGIN_TOL) {
                return Err(Error::AssumptionViolation(format!(
                    "q(0) = {q} but the process must start at zero (condition on zero first)"
                )));
            }
            if q.is_nan() || !(q > prev_q) {
                return Err(Error::AssumptionViolation(format!(
                    "q is not strictly increasing at t = {t} (q = {q}, previous {prev_q})"
                )));
            }
            prev_q = q;
        }
        kernel.horizon = kernel.q(1.0);
        let v1 = kernel.v(1.0);
        kernel.flags.v1_nonzero = v1 != 0.0 && kernel.horizon.is_finite();
        kernel.flags.v_positive_on_closed_interval = min_v > 0.0;
        let (qp_min, qp_max) = grid.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &t| {
            let d = kernel.q_prime(t);
            (lo.min(d), if d.is_nan() { f64::INFINITY } else { hi.max(d) })
        });
        kernel.flags.q_prime_bounded_away_from_zero = qp_min > 0.0 && qp_max.is_finite();
        Ok(kernel)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn preset_kind(&self) -> Option<Preset> {
        match self.form {
            Form::Preset(p) => Some(p),
            Form::Custom { .. } => None,
        }
    }

    /// True when derivatives are analytic rather than finite differences.
    pub fn has_analytic_derivatives(&self) -> bool {
        matches!(self.form, Form::Preset(_))
    }

    pub fn flags(&self) -> KernelFlags {
        self.flags
    }

    /// `T = q(1)`; infinite for bridge-like kernels.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Whether `v(1) != 0`, which the Kriging construction and `T` need.
    pub fn v1_nonzero(&self) -> bool {
        self.flags.v1_nonzero
    }

    pub fn require_v1_nonzero(&self) -> Result<()> {
        if self.v1_nonzero() {
            Ok(())
        } else {
            Err(Error::SingularCovariance(format!(
                "kernel `{}` has v(1) = 0; the knot covariance is singular and the \
                 equivalence construction requires v(1) != 0",
                self.name
            )))
        }
    }

    fn try_u(&self, t: f64) -> Result<f64> {
        match &self.form {
            Form::Preset(p) => Ok(match *p {
                Preset::BrownianMotion | Preset::BrownianBridge | Preset::Slepian => t,
                Preset::OrnsteinUhlenbeck { rate } => (rate * t).exp() - (-rate * t).exp(),
            }),
            Form::Custom { u, .. } => u.eval(t),
        }
    }

    fn try_v(&self, t: f64) -> Result<f64> {
        match &self.form {
            Form::Preset(p) => Ok(match *p {
                Preset::BrownianMotion => 1.0,
                Preset::OrnsteinUhlenbeck { rate } => (-rate * t).exp(),
                Preset::BrownianBridge => 1.0 - t,
                Preset::Slepian => 2.0 - t,
            }),
            Form::Custom { v, .. } => v.eval(t),
        }
    }

    /// `u(t)`; NaN if a custom expression fails to evaluate.
    pub fn u(&self, t: f64) -> f64 {
        self.try_u(t).unwrap_or(f64::NAN)
    }

    /// `v(t)`; NaN if a custom expression fails to evaluate.
    pub fn v(&self, t: f64) -> f64 {
        self.try_v(t).unwrap_or(f64::NAN)
    }

    /// `q(t) = u(t) / v(t)`, `+inf` where `v` vanishes and `u > 0`.
    pub fn q(&self, t: f64) -> f64 {
        match &self.form {
            Form::Preset(p) => match *p {
                Preset::BrownianMotion => t,
                Preset::OrnsteinUhlenbeck { rate } => (2.0 * rate * t).exp_m1(),
                Preset::BrownianBridge => {
                    if t >= 1.0 {
                        f64::INFINITY
                    } else {
                        t / (1.0 - t)
                    }
                }
                Preset::Slepian => t / (2.0 - t),
            },
            Form::Custom { .. } => ratio(self.u(t), self.v(t)),
        }
    }

    /// `q'(t)`: analytic for presets, central differences otherwise
    /// (second-order one-sided stencils within `FD_STEP` of an endpoint).
    pub fn q_prime(&self, t: f64) -> f64 {
        match &self.form {
            Form::Preset(p) => match *p {
                Preset::BrownianMotion => 1.0,
                Preset::OrnsteinUhlenbeck { rate } => 2.0 * rate * (2.0 * rate * t).exp(),
                Preset::BrownianBridge => {
                    if t >= 1.0 {
                        f64::INFINITY
                    } else {
                        1.0 / ((1.0 - t) * (1.0 - t))
                    }
                }
                Preset::Slepian => 2.0 / ((2.0 - t) * (2.0 - t)),
            },
            Form::Custom { .. } => finite_difference(|x| self.q(x), t),
        }
    }

    /// `v'(t)`, same policy as [`q_prime`](Self::q_prime).
    pub fn v_prime(&self, t: f64) -> f64 {
        match &self.form {
            Form::Preset(p) => match *p {
                Preset::BrownianMotion => 0.0,
                Preset::OrnsteinUhlenbeck { rate } => -rate * (-rate * t).exp(),
                Preset::BrownianBridge | Preset::Slepian => -1.0,
            },
            Form::Custom { .. } => finite_difference(|x| self.v(x), t),
        }
    }

    /// `K(s, t) = u(min(s,t)) v(max(s,t))` for `s, t` in `[0, 1]`.
    pub fn covariance(&self, s: f64, t: f64) -> Result<f64> {
        for x in [s, t] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidArgument(format!("{x} is outside [0, 1]")));
            }
        }
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        let k = self.try_u(lo)? * self.try_v(hi)?;
        if k.is_finite() {
            Ok(k)
        } else {
            Err(Error::Evaluation {
                t: lo,
                message: format!("non-finite covariance {k}"),
            })
        }
    }

    /// Gram matrix `[K(t_i, t_j)]`.
    pub fn gram_matrix(&self, points: &[f64]) -> Result<DMatrix<f64>> {
        let n = points.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let k = self.covariance(points[i], points[j])?;
                m[(i, j)] = k;
                m[(j, i)] = k;
            }
        }
        Ok(m)
    }

    /// Checks the assumptions on a `grid_size`-point equispaced grid.
    pub fn validate(&self, grid_size: usize) -> Result<ValidationReport> {
        validate_assumption(self, grid_size)
    }
}

impl fmt::Display for GaussMarkovKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::Preset(p) => write!(f, "{}", p.name()),
            Form::Custom { u, v } => write!(f, "{} (u = {u}, v = {v})", self.name),
        }
    }
}

fn ratio(u: f64, v: f64) -> f64 {
    if v == 0.0 {
        if u > 0.0 {
            f64::INFINITY
        } else if u < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        }
    } else {
        u / v
    }
}

fn finite_difference(g: impl Fn(f64) -> f64, t: f64) -> f64 {
    let h = FD_STEP;
    if t - h < 0.0 {
        (-3.0 * g(t) + 4.0 * g(t + h) - g(t + 2.0 * h)) / (2.0 * h)
    } else if t + h > 1.0 {
        (3.0 * g(t) - 4.0 * g(t - h) + g(t - 2.0 * h)) / (2.0 * h)
    } else {
        (g(t + h) - g(t - h)) / (2.0 * h)
    }
}

/// `m` equispaced points `0, 1/(m-1), ..., 1`.
pub fn unit_grid(m: usize) -> Vec<f64> {
    assert!(m >= 2, "grid needs at least two points");
    let d = (m - 1) as f64;
    (0..m).map(|i| i as f64 / d).collect()
}

/// Design points `t_{i,n} = i / n` for `i = 0..=n`.
pub fn design_points(n: usize) -> Vec<f64> {
    let d = n as f64;
    (0..=n).map(|i| i as f64 / d).collect()
}

/// Builds the kernel of `X | X_0 = 0` from an unconditioned triangular kernel
/// `U(s) V(t)`: `u = U - Q(0) V`, `v = V` with `Q(0) = U(0) / V(0)`.
pub fn condition_on_zero(name: &str, u_src: &str, v_src: &str) -> Result<GaussMarkovKernel> {
    let big_u = parse_kernel_expression(u_src)?;
    let big_v = parse_kernel_expression(v_src)?;
    let v0 = big_v.eval(0.0)?;
    if v0 == 0.0 {
        return Err(Error::DivisionByZero("V(0) = 0, so Q(0) = U(0)/V(0) is undefined".into()));
    }
    let q0 = big_u.eval(0.0)? / v0;
    let u = if q0 == 0.0 {
        big_u
    } else {
        let coefficient = if q0 > 0.0 {
            Expr::Num(q0)
        } else {
            Expr::Neg(Box::new(Expr::Num(-q0)))
        };
        Expr::Binary(
            BinOp::Sub,
            Box::new(big_u),
            Box::new(Expr::Binary(BinOp::Mul, Box::new(coefficient), Box::new(big_v.clone()))),
        )
    };
    GaussMarkovKernel::from_exprs(name, u, big_v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks never count as failures.
    pub informational: bool,
    /// Point where the check failed, or where the reported extremum sits.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kernel: String,
    pub grid_size: usize,
    pub checks: Vec<Check>,
    pub q_prime_min: f64,
    pub q_prime_max: f64,
    pub holder_index_v_prime: Option<f64>,
    pub holder_index_q_prime: Option<f64>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.informational)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed && !c.informational).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kernel: {}", self.kernel)?;
        writeln!(f, "grid: {} equispaced points on [0, 1]", self.grid_size)?;
        for c in &self.checks {
            let status = match (c.passed, c.informational) {
                (_, true) => "info",
                (true, false) => "pass",
                (false, false) => "FAIL",
            };
            write!(f, "  [{status}] {}: {}", c.name, c.detail)?;
            if let Some(w) = c.witness {
                write!(f, " (t = {w})")?;
            }
            writeln!(f)?;
        }
        let verdict = if self.all_passed() { "all checks passed" } else { "some checks failed" };
        write!(f, "{verdict}")
    }
}

/// Estimates a Hölder index of `g` from the decay of its maximal increment
/// over dyadic scales `2^-3 .. 2^-10`. `None` when `g` is constant or the
/// increments are not usable.
pub fn estimate_holder_index(g: impl Fn(f64) -> f64) -> Option<f64> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut all_flat = true;
    for k in 3..=10 {
        let cells = 1usize << k;
        let h = 1.0 / cells as f64;
        let mut osc = 0.0f64;
        for i in 0..cells {
            let a = g(i as f64 * h);
            let b = g((i + 1) as f64 * h);
            if a.is_finite() && b.is_finite() {
                osc = osc.max((b - a).abs());
            }
        }
        if osc > 1e-12 {
            all_flat = false;
            xs.push(h.ln());
            ys.push(osc.ln());
        }
    }
    if all_flat || xs.len() < 3 {
        return None;
    }
    crate::diagnostics::least_squares_slope(&xs, &ys).map(|fit| fit.slope)
}

/// Grid-based check of the Gauss-Markov assumptions.
pub fn validate_assumption(kernel: &GaussMarkovKernel, grid_size: usize) -> Result<ValidationReport> {
    if grid_size < 3 {
        return Err(Error::InvalidArgument("grid_size must be at least 3".into()));
    }
    let grid = unit_grid(grid_size);
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, informational: bool, witness: Option<f64>, detail: String| {
        checks.push(Check {
            name: name.into(),
            passed,
            informational,
            witness,
            detail,
        })
    };

    let neg = grid.iter().copied().find(|&t| kernel.u(t) * kernel.v(t) < 0.0);
    push(
        "uv_nonnegative",
        neg.is_none(),
        false,
        neg,
        match neg {
            None => "u(t)v(t) >= 0 on the grid".into(),
            Some(_) => "u(t)v(t) < 0".into(),
        },
    );

    let inner = &grid[1..grid.len() - 1];
    let degenerate = inner.iter().copied().find(|&t| !(kernel.u(t) * kernel.v(t) > 0.0));
    push(
        "uv_positive_interior",
        degenerate.is_none(),
        false,
        degenerate,
        match degenerate {
            None => "u(t)v(t) > 0 on the interior grid".into(),
            Some(_) => "process degenerate at an interior point".into(),
        },
    );

    let q0 = kernel.q(0.0);
    push(
        "q_zero_at_origin",
        q0.abs() <= ORIGIN_TOL,
        false,
        Some(0.0),
        format!("q(0) = {q0:e}"),
    );

    let mut non_monotone = None;
    for w in grid.windows(2) {
        let (a, b) = (kernel.q(w[0]), kernel.q(w[1]));
        if !(b > a) {
            non_monotone = Some(w[1]);
            break;
        }
    }
    push(
        "q_strictly_increasing",
        non_monotone.is_none(),
        false,
        non_monotone,
        match non_monotone {
            None => format!("q strictly increasing, q(1) = {}", kernel.q(1.0)),
            Some(_) => "q fails to increase".into(),
        },
    );

    let v1 = kernel.v(1.0);
    push(
        "v1_nonzero",
        kernel.v1_nonzero(),
        false,
        Some(1.0),
        if kernel.v1_nonzero() {
            format!("v(1) = {v1}, T = q(1) = {}", kernel.horizon())
        } else {
            format!("v(1) = {v1}; q(1) = {} is not a finite horizon", kernel.q(1.0))
        },
    );

    let (v_min, v_arg) = grid
        .iter()
        .map(|&t| (kernel.v(t), t))
        .fold((f64::INFINITY, 0.0), |acc, x| if x.0 < acc.0 { x } else { acc });
    push(
        "v_bounded_below",
        v_min > 0.0,
        false,
        Some(v_arg),
        format!("inf v = {v_min}"),
    );

    let mut qp_min = (f64::INFINITY, 0.0);
    let mut qp_max = (f64::NEG_INFINITY, 0.0);
    for &t in &grid {
        let d = kernel.q_prime(t);
        let d = if d.is_nan() { f64::INFINITY } else { d };
        if d < qp_min.0 {
            qp_min = (d, t);
        }
        if d > qp_max.0 {
            qp_max = (d, t);
        }
    }
    push(
        "q_prime_bounded_below",
        qp_min.0 > 0.0,
        false,
        Some(qp_min.1),
        format!("inf q' = {}", qp_min.0),
    );
    push(
        "q_prime_bounded_above",
        qp_max.0.is_finite(),
        false,
        Some(qp_max.1),
        format!("sup q' = {}", qp_max.0),
    );

    let hv = estimate_holder_index(|t| kernel.v_prime(t));
    let hq = estimate_holder_index(|t| kernel.q_prime(t));
    let describe = |h: Option<f64>| match h {
        Some(x) => format!("estimated index {x:.3} (informational, from dyadic increments)"),
        None => "constant on the grid; any index".into(),
    };
    push("holder_index_v_prime", true, true, None, describe(hv));
    push("holder_index_q_prime", true, true, None, describe(hq));

    Ok(ValidationReport {
        kernel: kernel.name().to_string(),
        grid_size,
        checks,
        q_prime_min: qp_min.0,
        q_prime_max: qp_max.0,
        holder_index_v_prime: hv,
        holder_index_q_prime: hq,
    })
}

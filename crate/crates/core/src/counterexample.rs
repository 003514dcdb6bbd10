//! Non-equivalence under the Brownian bridge.
//!
//! `f_n = c (1 - e_n / 2 - e_{-n} / 2)`, `c = sqrt(2/3) L n^{-beta}`, vanishes
//! on the design points, so the discrete experiment cannot tell `f_n` from
//! `f_0 = 0`, while the path increment over `[0, 1]` recovers `int f`
//! exactly because the bridge is pinned at both ends.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{
    e1_mean, simulate_e1, simulate_e2_batch, NoiseSampler, PathSample, Variant, DEFAULT_GRID_DENSITY,
};
use crate::fourier::FourierFunction;
use crate::kernel::GaussMarkovKernel;

/// Tolerance under which an action counts as equal to the target.
pub const ACTION_TOL: f64 = 1e-10;

/// `sqrt(2/3) L n^{-beta}`.
pub fn fn_level(n: usize, beta: f64, l: f64) -> f64 {
    (2.0f64 / 3.0).sqrt() * l * (n as f64).powf(-beta)
}

/// `theta_0 = c`, `theta_{+-n} = -c / 2`.
pub fn build_fn(n: usize, beta: f64, l: f64) -> Result<FourierFunction> {
    if n == 0 || !(beta > 0.0) || !(l > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1, beta > 0, L > 0".into()));
    }
    let c = fn_level(n, beta, l);
    FourierFunction::from_coefficients([(0, Complex64::new(c, 0.0)), (n as i64, Complex64::new(-c / 2.0, 0.0))])
}

/// Estimating `int_0^1 f` under indicator loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionProblem {
    pub tolerance: f64,
}

impl Default for DecisionProblem {
    fn default() -> Self {
        DecisionProblem { tolerance: ACTION_TOL }
    }
}

impl DecisionProblem {
    /// `1` unless the action hits `int_0^1 f`.
    pub fn loss(&self, f: &FourierFunction, action: f64) -> f64 {
        if (action - f.antiderivative(1.0)).abs() <= self.tolerance {
            0.0
        } else {
            1.0
        }
    }
}

/// `rho_2(h) = h(1) - h(0)`.
pub fn rho2(path: &PathSample) -> Result<f64> {
    match (path.grid.first(), path.grid.last()) {
        (Some(&a), Some(&b)) if a == 0.0 && b == 1.0 && path.values.len() == path.grid.len() => {
            Ok(path.values[path.values.len() - 1] - path.values[0])
        }
        _ => Err(Error::GridMissingEndpoints),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Premise {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleReport {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub seed: u64,
    pub premises: Vec<Premise>,
    pub all_premises_hold: bool,
    pub conclusion: String,
}

impl CounterexampleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for CounterexampleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Brownian bridge counterexample: n = {}, beta = {}, L = {}", self.n, self.beta, self.l)?;
        for p in &self.premises {
            let mark = if p.passed { "pass" } else { "FAIL" };
            writeln!(f, "  [{mark}] {}: {} (value {:e})", p.name, p.detail, p.value)?;
        }
        write!(f, "{}", self.conclusion)
    }
}

/// Checks the computable premises of the bridge construction for `f_0 = 0`
/// and `f_n`, using `replications` simulated paths for the path risks.
pub fn indistinguishability_check(n: usize, beta: f64, l: f64, seed: u64, replications: usize) -> Result<CounterexampleReport> {
    let bridge = GaussMarkovKernel::bridge();
    let f0 = FourierFunction::zero();
    let fn_ = build_fn(n, beta, l)?;
    let level = fn_level(n, beta, l);
    let mut premises = Vec::new();

    let grid_max = (1..=n).map(|j| fn_.evaluate_at_grid(j, n).abs()).fold(0.0, f64::max);
    premises.push(Premise {
        name: "fn_vanishes_on_grid".into(),
        passed: grid_max <= 1e-12,
        value: grid_max,
        detail: format!("max_j |f_n(j/{n})|"),
    });

    let integral = fn_.antiderivative(1.0);
    premises.push(Premise {
        name: "fn_integral".into(),
        passed: (integral - level).abs() <= 1e-12 && integral != 0.0,
        value: integral,
        detail: format!("int_0^1 f_n = sqrt(2/3) L n^-beta = {level:e}, nonzero"),
    });

    let norm_sq = fn_.sobolev_norm_sq(beta);
    premises.push(Premise {
        name: "fn_sobolev_member".into(),
        passed: norm_sq <= l * l,
        value: norm_sq,
        detail: format!("sum (1+|k|)^(2 beta) |theta_k|^2 <= L^2 = {}", l * l),
    });

    let m0 = e1_mean(&f0, n, Variant::Original);
    let mn = e1_mean(&fn_, n, Variant::Original);
    let mean_diff = m0.iter().zip(&mn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let s0 = simulate_e1(&bridge, &f0, n, seed, Variant::Original)?;
    let sn = simulate_e1(&bridge, &fn_, n, seed, Variant::Original)?;
    let sample_diff = s0.values.iter().zip(&sn.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    premises.push(Premise {
        name: "e1_means_equal".into(),
        passed: mean_diff <= 1e-12 && sample_diff <= 1e-12,
        value: mean_diff.max(sample_diff),
        detail: "discrete mean vectors under f_0 and f_n, and common-noise samples, coincide".into(),
    });
    premises.push(Premise {
        name: "e1_covariances_equal".into(),
        passed: true,
        value: 0.0,
        detail: "the noise does not depend on f, so both laws share one covariance".into(),
    });

    let problem = DecisionProblem::default();
    let grid_size = DEFAULT_GRID_DENSITY * n + 1;
    for (label, f) in [("f_0", &f0), ("f_n", &fn_)] {
        let mut risk = 0.0;
        for path in simulate_e2_batch(&bridge, f, n, seed, grid_size, replications)? {
            risk += problem.loss(f, rho2(&path)?);
        }
        let risk = risk / replications.max(1) as f64;
        premises.push(Premise {
            name: format!("e2_rho2_risk_{label}"),
            passed: risk == 0.0,
            value: risk,
            detail: format!("empirical risk of rho_2 = h(1) - h(0) over {replications} bridge paths"),
        });
    }

    premises.push(Premise {
        name: "targets_differ".into(),
        passed: (integral - f0.antiderivative(1.0)).abs() > ACTION_TOL,
        value: (integral - f0.antiderivative(1.0)).abs(),
        detail: "|int f_n - int f_0| exceeds the action tolerance".into(),
    });

    let all = premises.iter().all(|p| p.passed);
    let conclusion = if all {
        "All premises hold. The discrete experiment has the same law under f_0 and f_n, while the \
         correct actions differ, so any rule errs with probability at least 1/2 under one of them; \
         rho_2 has zero risk in the path experiment under both. Hence the deficiency is at least 1/4. \
         The final step is an argument over all decision rules and is restated here, not computed; \
         which of the two events carries mass at least 1/2 depends on the rule."
    } else {
        "Some premises fail; the deficiency bound is not supported for these parameters."
    };
    Ok(CounterexampleReport {
        n,
        beta,
        l,
        seed,
        premises,
        all_premises_hold: all,
        conclusion: conclusion.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    pub estimate: f64,
    pub expected: f64,
    pub stderr: f64,
    pub paths: usize,
    pub within_3se: bool,
}

/// Variance of `rho_2` over `paths` Brownian-motion paths with `f = 0`;
/// the expected value is `1 / n`.
pub fn rho2_variance_under_bm(n: usize, seed: u64, paths: usize) -> Result<MonteCarloCheck> {
    if paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    let bm = GaussMarkovKernel::bm();
    let sampler = NoiseSampler::on_design_points(&bm, n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let draws: Vec<f64> = sampler
        .sample_batch(seed, paths)
        .into_iter()
        .map(|xi| scale * (xi[n] - xi[0]))
        .collect();
    let mean = draws.iter().sum::<f64>() / paths as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (paths as f64 - 1.0);
    let expected = 1.0 / n as f64;
    let stderr = (2.0 / (paths as f64 - 1.0)).sqrt() * expected;
    Ok(MonteCarloCheck {
        estimate: var,
        expected,
        stderr,
        paths,
        within_3se: (var - expected).abs() <= 3.0 * stderr,
    })
}

//! Subcommand bodies. Each returns the rendered output and an optional gate.

use std::fmt::Write as _;

use gmequiv::counterexample::{indistinguishability_check, rho2_variance_under_bm, CounterexampleReport, MonteCarloCheck};
use gmequiv::diagnostics::{
    a_sum_bound, appendix_b_decomposition, kl_e1_vs_e1prime, kl_gaussian_dense, loglog_slope, rate_sweep,
    transformation_discrepancy, AppendixBTerms, Family, RateReport, TransformReport,
};
use gmequiv::experiments::{kriging_path_experiment, simulate_e1, simulate_e2, PathGrid, Variant};
use gmequiv::rkhs::kriging_residual_process;
use gmequiv::{validate_assumption, ClassSpec, FourierFunction, GaussMarkovKernel, KrigingInterpolator};
use serde::Serialize;

use crate::config::{Experiment, FamilyKind, Format, RunConfig, SubcommandKind};
use crate::CliError;

/// Gate tolerance for Kriging knot interpolation and route agreement.
pub const KRIGING_TOL: f64 = 1e-8;
/// Gate tolerance for the Parseval residual.
pub const PARSEVAL_TOL: f64 = 1e-10;
/// Tolerance reported for chain versus dense KL agreement.
pub const KL_TOL: f64 = 1e-10;

pub struct Outcome {
    pub body: String,
    /// `Some((passed, message))` for gated subcommands.
    pub gate: Option<(bool, String)>,
    pub warnings: Vec<String>,
}

impl Outcome {
    fn ungated(body: String) -> Self {
        Outcome {
            body,
            gate: None,
            warnings: Vec::new(),
        }
    }

    fn gated(body: String, passed: bool, message: String) -> Self {
        Outcome {
            body,
            gate: Some((passed, message)),
            warnings: Vec::new(),
        }
    }
}

/// Provenance lines written as `# ...` into every CSV and as fields of the
/// JSON envelope.
pub struct Meta {
    pub command: String,
    pub config: String,
}

impl Meta {
    pub fn new(command: String, cfg: &RunConfig) -> Self {
        Meta {
            command,
            config: cfg.to_json(),
        }
    }

    fn lines(&self) -> Vec<String> {
        vec![format!("command={}", self.command), format!("config={}", self.config)]
    }

    fn header(&self) -> String {
        self.lines().iter().map(|l| format!("# {l}\n")).collect()
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    command: &'a str,
    config: &'a RunConfig,
    result: T,
}

fn json<T: Serialize>(meta: &Meta, cfg: &RunConfig, result: T) -> String {
    let env = Envelope {
        command: &meta.command,
        config: cfg,
        result,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("output serializes");
    s.push('\n');
    s
}

/// Quotes a CSV field when it holds a separator, quote or newline.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn kernel(cfg: &RunConfig) -> Result<GaussMarkovKernel, CliError> {
    Ok(GaussMarkovKernel::from_spec(&cfg.kernel)?)
}

fn function(cfg: &RunConfig) -> Result<FourierFunction, CliError> {
    Ok(FourierFunction::from_spec(&cfg.function)?)
}

fn single_n(cfg: &RunConfig) -> Result<usize, CliError> {
    match cfg.n.as_slice() {
        [n] => Ok(*n),
        _ => Err(CliError::Usage(format!("this subcommand takes a single --n value, got {:?}", cfg.n))),
    }
}

fn check_grid(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.n.is_empty() || cfg.n.contains(&0) || cfg.n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage("n values must be positive and strictly increasing".into()));
    }
    Ok(())
}

pub fn execute(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    check_grid(cfg)?;
    match cfg.subcommand {
        SubcommandKind::Simulate => simulate(cfg, meta),
        SubcommandKind::Rates => rates(cfg, meta),
        SubcommandKind::Kriging => kriging(cfg, meta),
        SubcommandKind::Kl => kl(cfg, meta),
        SubcommandKind::Decompose => decompose(cfg, meta),
        SubcommandKind::Transform => transform(cfg, meta),
        SubcommandKind::Counterexample => counterexample(cfg, meta),
        SubcommandKind::Validate => validate(cfg, meta),
    }
}

fn simulate(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let n = single_n(cfg)?;
    let k = kernel(cfg)?;
    let f = function(cfg)?;
    let grid_size = cfg.grid_density * n + 1;
    let lines = meta.lines();
    let body = match cfg.experiment {
        Experiment::E1 | Experiment::E1prime => {
            let variant = if cfg.experiment == Experiment::E1 {
                Variant::Original
            } else {
                Variant::CellAveraged
            };
            let s = simulate_e1(&k, &f, n, cfg.seed, variant)?;
            match cfg.format {
                Format::Csv => s.to_csv(&lines),
                Format::Json => json(meta, cfg, &s),
            }
        }
        Experiment::E2 | Experiment::KrigingPath | Experiment::Residual => {
            let p = match cfg.experiment {
                Experiment::E2 => simulate_e2(&k, &f, n, cfg.seed, grid_size)?,
                Experiment::KrigingPath => kriging_path_experiment(&k, &f, n, cfg.seed, grid_size)?,
                _ => kriging_residual_process(&k, n, cfg.seed, cfg.grid_density)?,
            };
            match cfg.format {
                Format::Csv => p.to_csv(&lines),
                Format::Json => json(meta, cfg, &p),
            }
        }
    };
    Ok(Outcome::ungated(body))
}

fn rates(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let k = kernel(cfg)?;
    let family = match cfg.family {
        FamilyKind::Cos => Family::cosine(),
        FamilyKind::SingleFreq => Family::SingleFrequency { beta: cfg.beta, l: cfg.l },
        FamilyKind::Random => Family::Random {
            beta: cfg.beta,
            l: cfg.l,
            count: cfg.count,
            seed: cfg.seed,
        },
        FamilyKind::Fn => Family::Fixed(vec![("fn".into(), function(cfg)?)]),
    };
    let report: RateReport = rate_sweep(cfg.stat, &k, &family, &cfg.n, cfg.target)?;
    let message = match report.slope {
        Some(s) => format!(
            "{} slope {s:.4} against target {} (margin {}): {}",
            report.statistic,
            report.target,
            report.margin,
            if report.passed { "pass" } else { "fail" }
        ),
        None => format!("{}: no slope could be fitted; {}", report.statistic, report.note),
    };
    let body = match cfg.format {
        Format::Csv => report.to_csv(&meta.lines()),
        Format::Json => json(meta, cfg, &report),
    };
    Ok(Outcome::gated(body, report.passed, message))
}

#[derive(Serialize)]
struct KrigingSummary {
    n: usize,
    max_knot_error: f64,
    max_route_diff: f64,
    passed: bool,
}

#[derive(Serialize)]
struct KrigingCurve {
    n: usize,
    t: Vec<f64>,
    interpolant: Vec<f64>,
    tridiagonal: Vec<f64>,
    integral: Vec<f64>,
}

#[derive(Serialize)]
struct KrigingOutput {
    summaries: Vec<KrigingSummary>,
    curves: Vec<KrigingCurve>,
}

fn kriging(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let k = kernel(cfg)?;
    let f = function(cfg)?;
    let mut out = KrigingOutput {
        summaries: Vec::new(),
        curves: Vec::new(),
    };
    for &n in &cfg.n {
        let interp = KrigingInterpolator::new(&k, n)?;
        let grid = PathGrid::with_density(n, cfg.grid_density)?;
        let y: Vec<f64> = (1..=n).map(|j| f.antiderivative_at_grid(j, n)).collect();
        let interpolant = interp.curve(&y, &grid.points)?;
        let tridiagonal = grid
            .points
            .iter()
            .map(|&t| interp.interpolate_tridiagonal(&y, t))
            .collect::<gmequiv::Result<Vec<f64>>>()?;
        let mut knot_err = 0.0f64;
        for (j, &idx) in grid.knots.iter().enumerate().skip(1) {
            knot_err = knot_err
                .max((interpolant[idx] - y[j - 1]).abs())
                .max((tridiagonal[idx] - y[j - 1]).abs());
        }
        let route = interpolant
            .iter()
            .zip(&tridiagonal)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.summaries.push(KrigingSummary {
            n,
            max_knot_error: knot_err,
            max_route_diff: route,
            passed: knot_err <= KRIGING_TOL && route <= KRIGING_TOL,
        });
        out.curves.push(KrigingCurve {
            n,
            integral: grid.points.iter().map(|&t| f.antiderivative(t)).collect(),
            t: grid.points,
            interpolant,
            tridiagonal,
        });
    }
    let passed = out.summaries.iter().all(|s| s.passed);
    let worst_knot = out.summaries.iter().map(|s| s.max_knot_error).fold(0.0, f64::max);
    let worst_route = out.summaries.iter().map(|s| s.max_route_diff).fold(0.0, f64::max);
    let message = format!("kriging knot error {worst_knot:e}, route difference {worst_route:e} (tolerance {KRIGING_TOL:e})");
    let body = match cfg.format {
        Format::Json => json(meta, cfg, &out),
        Format::Csv => {
            let mut s = meta.header();
            let _ = writeln!(s, "# kernel={}, function={}", k.name(), f.to_json());
            for m in &out.summaries {
                let _ = writeln!(
                    s,
                    "# n={}, max_knot_error={}, max_route_diff={}, passed={}",
                    m.n, m.max_knot_error, m.max_route_diff, m.passed
                );
            }
            s.push_str("n,t,interpolant,tridiagonal,integral\n");
            for c in &out.curves {
                for i in 0..c.t.len() {
                    let _ = writeln!(s, "{},{},{},{},{}", c.n, c.t[i], c.interpolant[i], c.tridiagonal[i], c.integral[i]);
                }
            }
            s
        }
    };
    Ok(Outcome::gated(body, passed, message))
}

#[derive(Serialize)]
struct KlRow {
    n: usize,
    chain: f64,
    dense: f64,
    abs_diff: f64,
    rel_diff: f64,
    agree: bool,
}

fn kl(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let k = kernel(cfg)?;
    let f = function(cfg)?;
    let rows = cfg
        .n
        .iter()
        .map(|&n| {
            let chain = kl_e1_vs_e1prime(&k, &f, n)?;
            let dense = kl_gaussian_dense(&k, &f, n)?;
            let abs_diff = (chain - dense).abs();
            let rel_diff = if dense != 0.0 { abs_diff / dense.abs() } else { abs_diff };
            Ok(KlRow {
                n,
                chain,
                dense,
                abs_diff,
                rel_diff,
                agree: abs_diff <= KL_TOL,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let body = match cfg.format {
        Format::Json => json(meta, cfg, &rows),
        Format::Csv => {
            let mut s = meta.header();
            let _ = writeln!(s, "# kernel={}, function={}, tolerance={KL_TOL}", k.name(), f.to_json());
            s.push_str("n,chain,dense,abs_diff,rel_diff,agree\n");
            for r in &rows {
                let _ = writeln!(s, "{},{},{},{},{},{}", r.n, r.chain, r.dense, r.abs_diff, r.rel_diff, r.agree);
            }
            s
        }
    };
    Ok(Outcome::ungated(body))
}

#[derive(Serialize)]
struct DecomposeRow {
    #[serde(flatten)]
    terms: AppendixBTerms,
    a_sum_bound: f64,
    in_class: bool,
}

fn decompose(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let f = function(cfg)?;
    let class = ClassSpec::sobolev(cfg.beta, cfg.l)?;
    let in_class = class.contains(&f).unwrap_or(false);
    let rows = cfg
        .n
        .iter()
        .map(|&n| {
            Ok(DecomposeRow {
                terms: appendix_b_decomposition(&f, n)?,
                a_sum_bound: a_sum_bound(n, cfg.beta, cfg.l),
                in_class,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let worst = rows.iter().map(|r| r.terms.parseval_residual.abs()).fold(0.0, f64::max);
    let split = rows.iter().all(|r| r.terms.split_bound_holds);
    let passed = worst <= PARSEVAL_TOL && split;
    let message = format!("Parseval residual {worst:e} (tolerance {PARSEVAL_TOL:e}), three-term bound holds: {split}");
    let body = match cfg.format {
        Format::Json => json(meta, cfg, &rows),
        Format::Csv => {
            let mut s = meta.header();
            let _ = writeln!(s, "# function={}, beta={}, L={}", f.to_json(), cfg.beta, cfg.l);
            s.push_str("n,a_sum,b_sum,c_sum,total,parseval_residual,split_bound_holds,a_sum_bound,in_class\n");
            for r in &rows {
                let t = &r.terms;
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{}",
                    t.n, t.a_sum, t.b_sum, t.c_sum, t.total, t.parseval_residual, t.split_bound_holds, r.a_sum_bound, r.in_class
                );
            }
            s
        }
    };
    Ok(Outcome::gated(body, passed, message))
}

#[derive(Serialize)]
struct TransformOutput {
    rows: Vec<TransformReport>,
    slope: Option<f64>,
}

fn transform(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let k = kernel(cfg)?;
    let f = function(cfg)?;
    let rows = cfg
        .n
        .iter()
        .map(|&n| transformation_discrepancy(&k, &f, n))
        .collect::<gmequiv::Result<Vec<_>>>()?;
    let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let slope = loglog_slope(&cfg.n, &values).map(|fit| fit.slope);
    let mut warnings: Vec<String> = rows.iter().filter_map(|r| r.warning.clone()).collect();
    warnings.dedup();
    let out = TransformOutput { rows, slope };
    let body = match cfg.format {
        Format::Json => json(meta, cfg, &out),
        Format::Csv => {
            let mut s = meta.header();
            let slope = out.slope.map_or("none".to_string(), |v| v.to_string());
            let _ = writeln!(s, "# kernel={}, function={}, slope={slope}", k.name(), f.to_json());
            for w in &warnings {
                let _ = writeln!(s, "# warning={w}");
            }
            s.push_str("n,mean_term,variance_term,value\n");
            for r in &out.rows {
                let _ = writeln!(s, "{},{},{},{}", r.n, r.mean_term, r.variance_term, r.value);
            }
            s
        }
    };
    let mut outcome = Outcome::ungated(body);
    outcome.warnings = warnings;
    Ok(outcome)
}

#[derive(Serialize)]
struct CounterexampleOutput {
    #[serde(flatten)]
    report: CounterexampleReport,
    bm_rho2_variance: MonteCarloCheck,
}

fn counterexample(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let outputs = cfg
        .n
        .iter()
        .map(|&n| {
            Ok(CounterexampleOutput {
                report: indistinguishability_check(n, cfg.beta, cfg.l, cfg.seed, cfg.replications)?,
                bm_rho2_variance: rho2_variance_under_bm(n, cfg.seed, cfg.mc_paths)?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let passed = outputs
        .iter()
        .all(|o| o.report.all_premises_hold && o.bm_rho2_variance.within_3se);
    let message = if passed {
        "all premises hold and rho_2 under Brownian motion has variance 1/n".to_string()
    } else {
        let failed: Vec<usize> = outputs
            .iter()
            .filter(|o| !(o.report.all_premises_hold && o.bm_rho2_variance.within_3se))
            .map(|o| o.report.n)
            .collect();
        format!("premises fail for n in {failed:?}")
    };
    let body = match cfg.format {
        Format::Json if outputs.len() == 1 => json(meta, cfg, &outputs[0]),
        Format::Json => json(meta, cfg, &outputs),
        Format::Csv => {
            let mut s = meta.header();
            let _ = writeln!(s, "# beta={}, L={}, replications={}, mc_paths={}", cfg.beta, cfg.l, cfg.replications, cfg.mc_paths);
            s.push_str("n,premise,passed,value\n");
            for o in &outputs {
                for p in &o.report.premises {
                    let _ = writeln!(s, "{},{},{},{}", o.report.n, csv_field(&p.name), p.passed, p.value);
                }
                let mc = &o.bm_rho2_variance;
                let _ = writeln!(s, "{},bm_rho2_variance,{},{}", o.report.n, mc.within_3se, mc.estimate);
            }
            s
        }
    };
    Ok(Outcome::gated(body, passed, message))
}

fn validate(cfg: &RunConfig, meta: &Meta) -> Result<Outcome, CliError> {
    let k = kernel(cfg)?;
    let report = validate_assumption(&k, cfg.grid_size)?;
    let body = match cfg.format {
        Format::Json => json(meta, cfg, &report),
        Format::Csv => {
            let mut s = meta.header();
            let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
            let _ = writeln!(
                s,
                "# kernel={}, grid_size={}, q_prime_min={}, q_prime_max={}, holder_v_prime={}, holder_q_prime={}",
                report.kernel,
                report.grid_size,
                report.q_prime_min,
                report.q_prime_max,
                opt(report.holder_index_v_prime),
                opt(report.holder_index_q_prime)
            );
            s.push_str("check,passed,informational,witness,detail\n");
            for c in &report.checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    csv_field(&c.name),
                    c.passed,
                    c.informational,
                    opt(c.witness),
                    csv_field(&c.detail)
                );
            }
            s
        }
    };
    let mut outcome = Outcome::ungated(body);
    outcome.warnings = report
        .failures()
        .iter()
        .map(|c| format!("check `{}` failed: {}", c.name, c.detail))
        .collect();
    Ok(outcome)
}

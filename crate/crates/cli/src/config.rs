//! Resolved run configuration. Every flag is filled in, so a stored config
//! replays the run exactly.

use std::path::PathBuf;

use clap::ValueEnum;
use gmequiv::diagnostics::{Statistic, DEFAULT_N_GRID};
use gmequiv::experiments::DEFAULT_GRID_DENSITY;
use gmequiv::fourier::FunctionSpec;
use gmequiv::kernel::DEFAULT_VALIDATION_GRID;
use gmequiv::{FourierFunction, KernelSpec, Preset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubcommandKind {
    Simulate,
    Rates,
    Kriging,
    Kl,
    Decompose,
    Transform,
    Counterexample,
    Validate,
}

impl SubcommandKind {
    pub fn default_format(self) -> Format {
        match self {
            SubcommandKind::Counterexample | SubcommandKind::Validate => Format::Json,
            _ => Format::Csv,
        }
    }

    pub fn default_n(self) -> Vec<usize> {
        match self {
            SubcommandKind::Simulate => vec![16],
            SubcommandKind::Counterexample => vec![8],
            _ => DEFAULT_N_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// What `simulate` dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Discrete observations at the design points.
    E1,
    /// Cell-averaged discrete observations.
    E1prime,
    /// Continuous path `F_f + Xi / sqrt(n)` on the fine grid.
    E2,
    /// Kriging path built from the values of `F_f` at the design points.
    KrigingPath,
    /// Kriging residual of an independent noise copy.
    Residual,
}

/// Function family for `rates`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `cos(2 pi x)`.
    Cos,
    /// `L (1 + k)^-beta cos(2 pi k x)` for `k` in `{1, n/2, n, 2n}`.
    SingleFreq,
    /// Random members of the Sobolev ellipsoid.
    Random,
    /// The function given by `--fn`.
    Fn,
}

fn default_beta() -> f64 {
    1.0
}
fn default_l() -> f64 {
    1.0
}
fn default_count() -> usize {
    8
}
fn default_replications() -> usize {
    20
}
fn default_mc_paths() -> usize {
    20_000
}
fn default_grid_size() -> usize {
    DEFAULT_VALIDATION_GRID
}
fn default_grid_density() -> usize {
    DEFAULT_GRID_DENSITY
}
fn default_stat() -> Statistic {
    Statistic::ConditionI
}
fn default_experiment() -> Experiment {
    Experiment::E1
}
fn default_family() -> FamilyKind {
    FamilyKind::Cos
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: SubcommandKind,
    pub kernel: KernelSpec,
    pub function: FunctionSpec,
    pub n: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(default = "default_grid_density")]
    pub grid_density: usize,
    #[serde(default = "default_experiment")]
    pub experiment: Experiment,
    #[serde(default = "default_stat")]
    pub stat: Statistic,
    #[serde(default = "default_family")]
    pub family: FamilyKind,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(rename = "L", default = "default_l")]
    pub l: f64,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_mc_paths")]
    pub mc_paths: usize,
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
}

impl RunConfig {
    /// Defaults for `subcommand`: Brownian motion, `cos(2 pi x)`, seed 0.
    pub fn new(subcommand: SubcommandKind) -> Self {
        RunConfig {
            subcommand,
            kernel: KernelSpec::preset(Preset::BrownianMotion),
            function: FourierFunction::cosine(1, 1.0).to_spec(),
            n: subcommand.default_n(),
            seed: 0,
            out: None,
            format: subcommand.default_format(),
            grid_density: default_grid_density(),
            experiment: default_experiment(),
            stat: default_stat(),
            family: default_family(),
            beta: default_beta(),
            l: default_l(),
            count: default_count(),
            target: None,
            replications: default_replications(),
            mc_paths: default_mc_paths(),
            grid_size: default_grid_size(),
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Parses `--n`: a single value, a comma list `2,3,4`, or a doubling range
/// `16..512`.
pub fn parse_n_grid(text: &str) -> Result<Vec<usize>, String> {
    let parse = |s: &str| -> Result<usize, String> {
        let v: usize = s.trim().parse().map_err(|_| format!("`{s}` is not a positive integer"))?;
        if v == 0 {
            return Err("n must be at least 1".into());
        }
        Ok(v)
    };
    let ns = if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (parse(lo)?, parse(hi)?);
        if hi < lo {
            return Err(format!("empty range {lo}..{hi}"));
        }
        let mut ns = Vec::new();
        let mut n = lo;
        while n <= hi {
            ns.push(n);
            n *= 2;
        }
        ns
    } else {
        text.split(',').map(parse).collect::<Result<Vec<_>, _>>()?
    };
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err("n values must increase strictly".into());
    }
    Ok(ns)
}

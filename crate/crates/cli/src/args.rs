//! Command-line grammar and its translation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gmequiv::diagnostics::Statistic;
use gmequiv::fourier::FunctionSpec;
use gmequiv::{KernelSpec, Preset};

use crate::config::{parse_n_grid, Experiment, FamilyKind, Format, RunConfig, SubcommandKind};

#[derive(Debug, Parser)]
#[command(
    name = "gmequiv",
    version,
    about = "Discrete versus continuous Gauss-Markov regression experiments",
    after_help = "Exit codes: 0 success, 1 error, 2 gate failure, 64 usage error.\n\
                  GMEQUIV_THREADS caps the worker threads."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump one simulated experiment (E1, E1', E2, Kriging path or residual).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "e1")]
        experiment: Experiment,
    },
    /// Sweep a statistic over n and gate on its log-log slope.
    Rates {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        class: ClassArgs,
        /// condition_i, condition_ii, kl, transformation or appendix_b_terms.
        #[arg(long, default_value = "condition_i", value_parser = parse_stat)]
        stat: Statistic,
        /// Defaults to `fn` when --fn is given and `cos` otherwise.
        #[arg(long, value_enum)]
        family: Option<FamilyKind>,
        /// Members of the `random` family.
        #[arg(long, default_value_t = 8)]
        count: usize,
        /// Expected slope; derived from the statistic and beta when absent.
        #[arg(long, allow_negative_numbers = true)]
        target: Option<f64>,
    },
    /// Kriging interpolation curves of F_f and the weight-route comparison.
    Kriging {
        #[command(flatten)]
        common: Common,
    },
    /// KL divergence between E1 and E1': conditioning chain and dense Gaussian formula.
    Kl {
        #[command(flatten)]
        common: Common,
    },
    /// A/B/C discretisation terms with the DFT Parseval residual.
    Decompose {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        class: ClassArgs,
    },
    /// Mean and variance terms of the transformation statistic.
    Transform {
        #[command(flatten)]
        common: Common,
    },
    /// Premises of the Brownian bridge non-equivalence construction.
    Counterexample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        class: ClassArgs,
        /// Bridge paths per function for the rho_2 risk.
        #[arg(long, default_value_t = 20)]
        replications: usize,
        /// Brownian-motion paths for the rho_2 variance check.
        #[arg(long, default_value_t = 20_000)]
        mc_paths: usize,
    },
    /// Grid check of the kernel assumptions. Reports without gating.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = gmequiv::kernel::DEFAULT_VALIDATION_GRID)]
        grid_size: usize,
    },
    /// Re-run a stored configuration.
    Replay {
        /// JSON run configuration, as printed in the `# config=` metadata line.
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// bm, ou, ou(L), bridge or slepian.
    #[arg(long, value_parser = parse_preset, conflicts_with = "kernel")]
    pub preset: Option<Preset>,
    /// Kernel JSON: {"name","u","v"} with expressions in t, or {"preset","params"}.
    #[arg(long, value_name = "JSON", value_parser = parse_kernel_spec)]
    pub kernel: Option<KernelSpec>,
    /// Function JSON: {"coeffs": [[k, re, im], ...]}.
    #[arg(long = "fn", value_name = "JSON", value_parser = parse_function_spec)]
    pub function: Option<FunctionSpec>,
    /// A value, a comma list, or a doubling range such as 16..512.
    #[arg(long, value_name = "N", value_parser = parse_n)]
    pub n: Option<NGrid>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Fine-grid points per design cell for path output.
    #[arg(long, default_value_t = gmequiv::experiments::DEFAULT_GRID_DENSITY)]
    pub grid_density: usize,
}

#[derive(Debug, Args)]
pub struct ClassArgs {
    /// Sobolev smoothness.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Sobolev radius.
    #[arg(long = "L", default_value_t = 1.0)]
    pub l: f64,
}

/// Parsed `--n` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGrid(pub Vec<usize>);

fn parse_n(s: &str) -> Result<NGrid, String> {
    parse_n_grid(s).map(NGrid)
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::parse(s).map_err(|e| e.to_string())
}

fn parse_stat(s: &str) -> Result<Statistic, String> {
    Statistic::parse(s).map_err(|e| e.to_string())
}

fn parse_kernel_spec(s: &str) -> Result<KernelSpec, String> {
    KernelSpec::from_json(s).map_err(|e| e.to_string())
}

fn parse_function_spec(s: &str) -> Result<FunctionSpec, String> {
    serde_json::from_str(s).map_err(|e| e.to_string())
}

/// Either a run configuration or the path of one to replay.
pub enum Request {
    Run(Box<RunConfig>),
    Replay(PathBuf),
}

impl Command {
    pub fn into_request(self) -> Request {
        let (kind, common) = match &self {
            Command::Replay { config } => return Request::Replay(config.clone()),
            Command::Simulate { common, .. } => (SubcommandKind::Simulate, common),
            Command::Rates { common, .. } => (SubcommandKind::Rates, common),
            Command::Kriging { common } => (SubcommandKind::Kriging, common),
            Command::Kl { common } => (SubcommandKind::Kl, common),
            Command::Decompose { common, .. } => (SubcommandKind::Decompose, common),
            Command::Transform { common } => (SubcommandKind::Transform, common),
            Command::Counterexample { common, .. } => (SubcommandKind::Counterexample, common),
            Command::Validate { common, .. } => (SubcommandKind::Validate, common),
        };
        let fn_given = common.function.is_some();
        let mut cfg = RunConfig::new(kind);
        if let Some(p) = common.preset {
            cfg.kernel = KernelSpec::preset(p);
        }
        if let Some(k) = &common.kernel {
            cfg.kernel = k.clone();
        }
        if let Some(f) = &common.function {
            cfg.function = f.clone();
        }
        if let Some(n) = &common.n {
            cfg.n = n.0.clone();
        }
        cfg.seed = common.seed;
        cfg.out = common.out.clone();
        if let Some(f) = common.format {
            cfg.format = f;
        }
        cfg.grid_density = common.grid_density;

        let class = |cfg: &mut RunConfig, c: &ClassArgs| {
            cfg.beta = c.beta;
            cfg.l = c.l;
        };
        match self {
            Command::Simulate { experiment, .. } => cfg.experiment = experiment,
            Command::Rates {
                class: c,
                stat,
                family,
                count,
                target,
                ..
            } => {
                class(&mut cfg, &c);
                cfg.stat = stat;
                cfg.family = family.unwrap_or(if fn_given { FamilyKind::Fn } else { FamilyKind::Cos });
                cfg.count = count;
                cfg.target = target;
            }
            Command::Decompose { class: c, .. } => class(&mut cfg, &c),
            Command::Counterexample {
                class: c,
                replications,
                mc_paths,
                ..
            } => {
                class(&mut cfg, &c);
                cfg.replications = replications;
                cfg.mc_paths = mc_paths;
            }
            Command::Validate { grid_size, .. } => cfg.grid_size = grid_size,
            _ => {}
        }
        Request::Run(Box::new(cfg))
    }
}

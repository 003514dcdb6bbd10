//! Gauss-Markov noise models for nonparametric regression.
//!
//! The crate covers triangular covariance kernels and their time-change
//! representation, Fourier-series regression functions on Sobolev and Hölder
//! classes, the reproducing kernel Hilbert space of a kernel together with
//! Kriging interpolation, simulation of the discrete regression experiment and
//! the continuous-path experiment, and the statistics that control how far
//! apart the two are.

// Negated comparisons are used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterexample;
pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod fourier;
pub mod kernel;
pub mod quadrature;
pub mod rkhs;
pub mod rng;

pub use error::{Error, Result};
pub use expr::{parse_kernel_expression, Expr, ParseError, GRAMMAR};
pub use fourier::{ClassSpec, FourierFunction};
pub use kernel::{condition_on_zero, validate_assumption, GaussMarkovKernel, KernelSpec, Preset, ValidationReport};
pub use rkhs::{KrigingInterpolator, RkhsElement};

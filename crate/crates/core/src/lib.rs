//! Reachable set estimation from simulation data.
//!
//! Final states of Monte Carlo trajectories are summarized by the empirical
//! inverse Christoffel function `C(x) = z_k(x)ᵀ M⁻¹ z_k(x)`; the set
//! `{x : C(x) <= max_i C(x_i)}` estimates the reachable set, and the sample
//! count from [`pac::pac_sample_size`] makes it `ε`-accurate with confidence
//! `1 - δ`.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod christoffel;
pub mod cli;
pub mod config;
pub mod document;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod pac;
pub mod sampler;
pub mod systems;
pub mod validator;

pub use basis::{basis_size, MonomialBasis, MultiIndex};
pub use christoffel::{
    fit, fit_with, level_from_points, ChristoffelEstimator, FitOptions, NormalizationMap,
};
pub use error::{Error, Result};
pub use pac::{chernoff_sample_size, pac_sample_size, vc_dimension, ChernoffParams, PacParams};
pub use sampler::{generate_cloud, Interval, ReachabilityProblem, SampleCloud};
pub use systems::{simulate, IntegratorConfig, SystemId, SystemSpec};
pub use validator::{validate, AccuracyReport};

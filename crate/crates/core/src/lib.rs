//! Transfer learning for high-dimensional logistic regression.
//!
//! A multinomial logistic model fitted on a large source sample supplies a
//! linear feature map `Z = B'X`. The binary target model is then fitted on
//! those `K` features instead of the raw `p` covariates, and a
//! centralized, standardized quadratic-form test decides whether the
//! features capture everything `X` knows about the target label.
//!
//! Modules, bottom-up:
//!
//! - [`glm`]: log-likelihoods and maximum-likelihood fits.
//! - [`transfer`]: the feature map and the transferred estimator.
//! - [`suff_test`]: the sufficiency test statistics and decision.
//! - [`simgen`]: seeded synthetic data from the AR(1) design.
//! - [`harness`]: replicated Monte Carlo experiments.
//! - [`io`] and [`cli`]: file formats and the `tlsuff` command.

pub mod cli;
pub mod error;
pub mod glm;
pub mod harness;
pub mod io;
pub mod rng;
pub mod simgen;
pub mod suff_test;
pub mod transfer;

pub use error::{Error, Result};
pub use glm::{
    fit_binary_logistic, fit_multinomial_logistic, FitDiagnostics, FitOptions, SourceDataset,
    SourceModel, TargetDataset,
};
pub use suff_test::{test_sufficiency, SufficiencyResult};
pub use transfer::{fit_transfer, oracle_fit, TransferFit};

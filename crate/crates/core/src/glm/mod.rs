//! Maximum-likelihood fitting of intercept-free binary and multinomial
//! logistic regression.

mod data;
mod fit;
mod likelihood;
pub(crate) mod linalg;
mod link;
mod optim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use data::{SourceDataset, TargetDataset};
pub use fit::{fit_binary_logistic, fit_multinomial_logistic, SourceModel};
pub(crate) use fit::fit_binary_design;
pub use likelihood::{
    binary_gradient, binary_loglik, class_probabilities, multinomial_gradient,
    multinomial_loglik,
};
pub use link::{log_sum_exp_with_base, sigmoid, softmax_with_base, softplus};

/// Which second-order scheme drives the ascent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Exact Newton when the parameter count is at most
    /// [`FitOptions::dense_hessian_cap`], limited-memory quasi-Newton otherwise.
    Auto,
    ExactNewton,
    QuasiNewton,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Stop once the gradient sup-norm falls to this level.
    pub grad_tol: f64,
    /// Stop once `|f_new - f_old| / |f_old|` falls to this level.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Weight of the `ridge * |theta|^2 / 2` penalty. Zero disables it.
    pub ridge: f64,
    pub solver: Solver,
    pub dense_hessian_cap: usize,
    pub lbfgs_history: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            rel_tol: 1e-12,
            max_iter: 200,
            ridge: 0.0,
            solver: Solver::Auto,
            dense_hessian_cap: 2000,
            lbfgs_history: 10,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidOptions("max_iter must be at least 1".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidOptions(format!(
                "ridge must be a finite non-negative number, got {}",
                self.ridge
            )));
        }
        if self.lbfgs_history == 0 {
            return Err(Error::InvalidOptions("lbfgs_history must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn uses_newton(&self, n_params: usize) -> bool {
        match self.solver {
            Solver::ExactNewton => true,
            Solver::QuasiNewton => false,
            Solver::Auto => n_params <= self.dense_hessian_cap,
        }
    }
}

/// Why an ascent stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Gradient,
    RelativeChange,
    /// No step along the search direction increased the objective: the
    /// iterate already sits at the optimum to working precision.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub final_grad_norm: f64,
    pub final_loglik: f64,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub solver: Solver,
    /// Objective value (log-likelihood minus the ridge penalty) after every
    /// accepted step, starting from the all-zero initial point.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loglik_trace: Vec<f64>,
}

//! The transferred estimator: project the target design onto the source
//! coefficient directions, fit a `K`-dimensional logistic model there, and
//! map the fit back to the original `p` coordinates.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{check_dim, Error, Result};
use crate::glm::linalg::solve_spd;
use crate::glm::{fit_binary_design, sigmoid, FitDiagnostics, FitOptions, SourceModel, TargetDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct TransferFit {
    /// Coefficients on the `K` transferred features.
    pub gamma: Array1<f64>,
    /// The implied `p`-dimensional coefficient, `B * gamma`.
    pub theta: Array1<f64>,
    /// The `n x K` feature matrix the working model was fitted on.
    pub z: Array2<f64>,
    pub diagnostics: FitDiagnostics,
}

/// Feature map: row `i` of the result is `B' x_i`.
pub fn make_features(b: ArrayView2<'_, f64>, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_dim("feature map input columns", b.nrows(), x.ncols())?;
    Ok(x.dot(&b))
}

/// Fits the working model on features built from the estimated source
/// coefficients. The features are treated as fixed data.
pub fn fit_transfer(source: &SourceModel, data: &TargetDataset, opts: &FitOptions) -> Result<TransferFit> {
    fit_with_basis(source.b.view(), data, opts)
}

/// Same construction as [`fit_transfer`] with the true coefficient matrix,
/// available only in simulation.
pub fn oracle_fit(b_true: ArrayView2<'_, f64>, data: &TargetDataset, opts: &FitOptions) -> Result<TransferFit> {
    fit_with_basis(b_true, data, opts)
}

fn fit_with_basis(b: ArrayView2<'_, f64>, data: &TargetDataset, opts: &FitOptions) -> Result<TransferFit> {
    let z = make_features(b, data.x())?;
    if b.ncols() >= data.n() {
        return Err(Error::InvalidData(format!(
            "need more target samples ({}) than transferred features ({})",
            data.n(),
            b.ncols()
        )));
    }
    let (gamma, diagnostics) = fit_binary_design(z.view(), data.y(), opts)?;
    let theta = b.dot(&gamma);
    assert!(theta
        .iter()
        .zip(b.rows())
        .all(|(t, row)| (t - row.dot(&gamma)).abs() <= 1e-12 * (1.0 + t.abs())));
    Ok(TransferFit {
        gamma,
        theta,
        z,
        diagnostics,
    })
}

/// Mean squared error `p^{-1} sum_j (estimate_j - truth_j)^2`.
pub fn mse(estimate: ArrayView1<'_, f64>, truth: ArrayView1<'_, f64>) -> Result<f64> {
    check_dim("mse operands", truth.len(), estimate.len())?;
    if truth.is_empty() {
        return Err(Error::InvalidData("mse of empty vectors".into()));
    }
    let sum: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / truth.len() as f64)
}

/// Plug-in asymptotic scale `sqrt(v' B I(gamma)^{-1} B' v)` for the linear
/// combination `v' theta`, with `I` the empirical Fisher information of the
/// working model. The standard error of `v' theta_hat` is this over `sqrt(n)`.
///
/// Ignores estimation error in `B`, so it is only meaningful when the source
/// sample dwarfs the target sample.
pub fn plugin_scale(b: ArrayView2<'_, f64>, fit: &TransferFit, v: ArrayView1<'_, f64>) -> Result<f64> {
    check_dim("direction", b.nrows(), v.len())?;
    check_dim("feature columns", b.ncols(), fit.z.ncols())?;
    let n = fit.z.nrows() as f64;
    let eta = fit.z.dot(&fit.gamma);
    let mut weighted = fit.z.clone();
    for (mut row, &e) in weighted.rows_mut().into_iter().zip(&eta) {
        let mu = sigmoid(e);
        row *= mu * (1.0 - mu) / n;
    }
    let info = weighted.t().dot(&fit.z);
    let u = b.t().dot(&v);
    let solved = solve_spd(&info, u.as_slice().expect("contiguous")).ok_or(Error::DegenerateVariance { value: 0.0 })?;
    let var: f64 = u.iter().zip(&solved).map(|(a, b)| a * b).sum();
    Ok(var.max(0.0).sqrt())
}

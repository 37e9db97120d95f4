//! Test of transfer-learning sufficiency.
//!
//! Under the null the working-model residuals `e_i = y_i - g(z_i' gamma)` are
//! uncorrelated with every raw covariate, so `|n^{-1} sum_i e_i x_i|^2` should
//! be small. Everything below is a function of the residual vector and the
//! `n x n` Gram matrix of the design, so the `p x p` residual-weighted
//! covariance is never formed.

mod gram;
mod normal;

use log::warn;
use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::glm::{sigmoid, FitOptions, SourceModel, TargetDataset};
use crate::transfer::{fit_transfer, oracle_fit, TransferFit};

pub use gram::{gram, gram_with_cap, GramMatrix, DEFAULT_GRAM_CAP};
pub use normal::{normal_cdf, normal_pdf, normal_quantile, normal_sf};

/// Smallest trace estimate accepted as a usable variance.
const MIN_TRACE_SQ: f64 = 1e-300;

/// All intermediate quantities of one test. Serializes to the flat record
/// `n, p, K, T1, T2, trace_sigma, trace_sigma_sq, T4, p_value, alpha, reject`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyResult {
    pub n: usize,
    pub p: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub trace_sigma: f64,
    pub trace_sigma_sq: f64,
    #[serde(rename = "T4")]
    pub t4: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

/// `e_i = y_i - g(z_i' gamma)`.
pub fn pseudo_residuals(
    z: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    gamma: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    check_dim("gamma", z.ncols(), gamma.len())?;
    check_dim("labels", z.nrows(), y.len())?;
    let eta = z.dot(&gamma);
    Ok(Array1::from_iter(
        y.iter().zip(&eta).map(|(&y, &e)| y - sigmoid(e)),
    ))
}

/// `T1 = n^{-2} e' G e`, the squared norm of the mean residual-weighted row.
pub fn statistic_t1(resid: ArrayView1<'_, f64>, g: &GramMatrix) -> Result<f64> {
    check_dim("residuals", g.n(), resid.len())?;
    let n = resid.len() as f64;
    let ge = g.matrix().dot(&resid);
    Ok(resid.dot(&ge) / (n * n))
}

/// Trace of the moment estimator `n^{-1} sum_i e_i^2 x_i x_i'`, read off the
/// Gram diagonal.
pub fn trace_sigma_hat(resid: ArrayView1<'_, f64>, g: &GramMatrix) -> Result<f64> {
    check_dim("residuals", g.n(), resid.len())?;
    let n = resid.len() as f64;
    let s: f64 = resid
        .iter()
        .zip(g.diagonal())
        .map(|(e, d)| e * e * d)
        .sum();
    Ok(s / n)
}

/// Centralized statistic `T1 - tr(Sigma_hat) / n`.
pub fn statistic_t2(t1: f64, trace_sigma: f64, n: usize) -> f64 {
    t1 - trace_sigma / n as f64
}

/// Bias-corrected estimate of `tr(Sigma^2)`:
/// `n^{-2} sum_{i != j} e_i^2 e_j^2 (x_i' x_j)^2`.
pub fn trace_sigma_sq_hat(resid: ArrayView1<'_, f64>, g: &GramMatrix) -> Result<f64> {
    check_dim("residuals", g.n(), resid.len())?;
    let n = resid.len();
    if n < 2 {
        return Err(Error::TooFewSamples { n, min: 2 });
    }
    let sq: Vec<f64> = resid.iter().map(|e| e * e).collect();
    let gm = g.matrix();
    let mut total = 0.0;
    for i in 1..n {
        let row = gm.row(i);
        let mut inner = 0.0;
        for j in 0..i {
            let gij = row[j];
            inner += sq[j] * gij * gij;
        }
        total += sq[i] * inner;
    }
    let nf = n as f64;
    Ok(2.0 * total / (nf * nf))
}

/// Standardizes `T2` by `sqrt(2 * trace_sq / n^2)`. With the estimated
/// trace this is `T4`; with the population trace it is `T3`.
pub fn statistic_t4(t2: f64, trace_sigma_sq: f64, n: usize) -> Result<f64> {
    if !(trace_sigma_sq >= MIN_TRACE_SQ) {
        return Err(Error::DegenerateVariance {
            value: trace_sigma_sq,
        });
    }
    let nf = n as f64;
    Ok(t2 / (2.0 * trace_sigma_sq / (nf * nf)).sqrt())
}

/// `T2` standardized by a known population `tr(Sigma^2)`; only computable in
/// simulation.
pub fn statistic_t3(t2: f64, population_trace_sq: f64, n: usize) -> Result<f64> {
    statistic_t4(t2, population_trace_sq, n)
}

/// Computes every statistic from a design, its transferred features, the
/// labels and a fitted `gamma`.
pub fn sufficiency_statistics(
    x: ArrayView2<'_, f64>,
    z: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    gamma: ArrayView1<'_, f64>,
    alpha: f64,
) -> Result<SufficiencyResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError { value: alpha });
    }
    check_dim("feature rows", x.nrows(), z.nrows())?;
    let resid = pseudo_residuals(z, y, gamma)?;
    let g = gram(x)?;
    let n = x.nrows();
    let t1 = statistic_t1(resid.view(), &g)?;
    let trace_sigma = trace_sigma_hat(resid.view(), &g)?;
    let t2 = statistic_t2(t1, trace_sigma, n);
    let trace_sigma_sq = trace_sigma_sq_hat(resid.view(), &g)?;
    let t4 = statistic_t4(t2, trace_sigma_sq, n)?;
    let critical = normal_quantile(1.0 - alpha)?;
    Ok(SufficiencyResult {
        n,
        p: x.ncols(),
        k: z.ncols(),
        t1,
        t2,
        trace_sigma,
        trace_sigma_sq,
        t4,
        p_value: normal_sf(t4),
        alpha,
        reject: t4 > critical,
    })
}

/// Tests an already fitted transferred model on the data it was fitted to.
pub fn test_fitted(fit: &TransferFit, data: &TargetDataset, alpha: f64) -> Result<SufficiencyResult> {
    sufficiency_statistics(data.x(), fit.z.view(), data.y(), fit.gamma.view(), alpha)
}

/// Fits the transferred model and tests whether its features are sufficient.
/// Rejects when `T4` exceeds the upper `alpha` normal quantile.
pub fn test_sufficiency(
    source: &SourceModel,
    data: &TargetDataset,
    alpha: f64,
    opts: &FitOptions,
) -> Result<SufficiencyResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError { value: alpha });
    }
    if let Some(big_n) = source.source_n {
        let n = data.n() as f64;
        let ratio = n * n * data.p() as f64 / big_n as f64;
        if ratio > 1.0 {
            warn!(
                "n^2 p / N = {ratio:.3} exceeds 1; the normal reference for T4 may be unreliable"
            );
        }
    }
    let fit = fit_transfer(source, data, opts)?;
    test_fitted(&fit, data, alpha)
}

/// The same test with features built from the true coefficients.
pub fn oracle_test(
    b_true: ArrayView2<'_, f64>,
    data: &TargetDataset,
    alpha: f64,
    opts: &FitOptions,
) -> Result<SufficiencyResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::DomainError { value: alpha });
    }
    let fit = oracle_fit(b_true, data, opts)?;
    test_fitted(&fit, data, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn zero_residuals() {
        let x = array![[1.0, 2.0], [0.5, -1.0], [2.0, 0.0]];
        let g = gram(x.view()).unwrap();
        let e = Array1::zeros(3);
        assert_eq!(statistic_t1(e.view(), &g).unwrap(), 0.0);
        assert_eq!(trace_sigma_hat(e.view(), &g).unwrap(), 0.0);
        assert_eq!(trace_sigma_sq_hat(e.view(), &g).unwrap(), 0.0);
        assert_eq!(statistic_t2(0.0, 0.0, 3), 0.0);
        assert!(matches!(statistic_t4(0.0, 0.0, 3), Err(Error::DegenerateVariance { .. })));
    }

    #[test]
    fn scalar_cases() {
        let g = gram(array![[2.0]].view()).unwrap();
        let e = array![0.3];
        let t1 = statistic_t1(e.view(), &g).unwrap();
        assert!((t1 - 0.09 * 4.0).abs() < 1e-15);
        let tr = trace_sigma_hat(e.view(), &g).unwrap();
        assert_eq!(statistic_t2(t1, tr, 1), 0.0);
        assert!(matches!(trace_sigma_sq_hat(e.view(), &g), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn unit_residuals_give_mean_squared_norm() {
        let x = array![[1.0, 2.0], [3.0, 0.0]];
        let g = gram(x.view()).unwrap();
        let e = array![1.0, 1.0];
        assert_eq!(trace_sigma_hat(e.view(), &g).unwrap(), (5.0 + 9.0) / 2.0);
    }

    #[test]
    fn orthogonal_rows_have_zero_trace_sq() {
        let x = array![[1.0, 0.0], [0.0, 3.0]];
        let g = gram(x.view()).unwrap();
        assert_eq!(trace_sigma_sq_hat(array![0.4, -0.2].view(), &g).unwrap(), 0.0);
    }

    #[test]
    fn t4_normalization() {
        let tr = 3.7;
        let n = 10;
        let scale = (2.0 * tr / 100.0f64).sqrt();
        assert_eq!(statistic_t4(0.0, tr, n).unwrap(), 0.0);
        assert!((statistic_t4(scale, tr, n).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn residuals_at_zero_gamma_are_half() {
        let z = Array2::from_elem((4, 2), 0.7);
        let y = array![1.0, 0.0, 1.0, 0.0];
        let r = pseudo_residuals(z.view(), y.view(), array![0.0, 0.0].view()).unwrap();
        assert_eq!(r, array![0.5, -0.5, 0.5, -0.5]);
        let r = pseudo_residuals(z.view(), y.view(), array![40.0, 40.0].view()).unwrap();
        assert!(r[0].abs() < 1e-20);
    }

    #[test]
    fn result_serializes_with_exact_field_names() {
        let r = SufficiencyResult {
            n: 3,
            p: 4,
            k: 2,
            t1: 0.1,
            t2: 0.0,
            trace_sigma: 0.3,
            trace_sigma_sq: 0.2,
            t4: 0.0,
            p_value: 0.5,
            alpha: 0.05,
            reject: false,
        };
        let v: serde_json::Value = serde_json::to_value(r).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = vec![
            "n", "p", "K", "T1", "T2", "trace_sigma", "trace_sigma_sq", "T4", "p_value", "alpha",
            "reject",
        ];
        let mut got = keys.clone();
        got.sort_unstable();
        expected.sort_unstable();
        assert_eq!(got, expected);
    }
}

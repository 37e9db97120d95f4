use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::data::{SourceDataset, TargetDataset};
use super::likelihood::{BinaryLogLik, MultinomialLogLik};
use super::optim::maximize;
use super::{FitDiagnostics, FitOptions};
use crate::error::{check_dim, Error, Result};

/// Fitted multinomial model: column `k` of `b` is the coefficient vector of
/// class `k+1` against base class 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    pub b: Array2<f64>,
    /// Present when the model came out of a fit rather than a file.
    pub diagnostics: Option<FitDiagnostics>,
    /// Number of source observations behind the estimate, when known.
    pub source_n: Option<usize>,
}

impl SourceModel {
    /// Wraps externally supplied coefficients (`p x K`).
    pub fn from_coefficients(b: Array2<f64>) -> Result<Self> {
        if b.nrows() == 0 || b.ncols() == 0 {
            return Err(Error::InvalidData("coefficient matrix is empty".into()));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "coefficient matrix",
            });
        }
        Ok(Self {
            b,
            diagnostics: None,
            source_n: None,
        })
    }

    pub fn p(&self) -> usize {
        self.b.nrows()
    }

    pub fn k(&self) -> usize {
        self.b.ncols()
    }
}

pub(crate) fn fit_binary_design(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    opts: &FitOptions,
) -> Result<(Array1<f64>, FitDiagnostics)> {
    check_dim("labels", x.nrows(), y.len())?;
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::DegenerateLabels);
    }
    let sol = maximize(&BinaryLogLik { x, y }, opts)?;
    Ok((Array1::from(sol.params), sol.diagnostics))
}

/// Maximum-likelihood coefficients of the binary logistic model without
/// intercept.
pub fn fit_binary_logistic(
    data: &TargetDataset,
    opts: &FitOptions,
) -> Result<(Array1<f64>, FitDiagnostics)> {
    fit_binary_design(data.x(), data.y(), opts)
}

/// Maximum-likelihood coefficient matrix of the multinomial model.
///
/// Exact Newton is used while `p * K` stays within the dense-Hessian cap;
/// beyond it the ascent switches to limited-memory BFGS.
pub fn fit_multinomial_logistic(data: &SourceDataset, opts: &FitOptions) -> Result<SourceModel> {
    if let Some(class) = data.missing_class() {
        return Err(Error::MissingClass { class });
    }
    let obj = MultinomialLogLik::new(data.x(), data.labels(), data.k());
    let sol = maximize(&obj, opts)?;
    let b = Array2::from_shape_vec((data.k(), data.p()), sol.params)
        .expect("parameter length")
        .reversed_axes()
        .as_standard_layout()
        .into_owned();
    Ok(SourceModel {
        b,
        diagnostics: Some(sol.diagnostics),
        source_n: Some(data.n()),
    })
}

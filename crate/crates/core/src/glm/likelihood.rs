use std::cell::{OnceCell, RefCell};

use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView1, ArrayView2};

use super::data::{SourceDataset, TargetDataset};
use super::linalg::{cholesky_in_place, cholesky_solve};
use super::link::{sigmoid, softmax_with_base, softplus};
use crate::error::{check_dim, Error, Result};

/// Rows per block when streaming over large designs. Keeps one block of
/// rows hot in cache while its logits and gradient contribution are formed.
const ROW_BLOCK: usize = 512;

/// A smooth concave objective over a flat parameter vector.
pub(crate) trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, params: &[f64]) -> f64;
    /// Returns the value and writes the gradient into `grad`.
    fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> f64;
    /// Negative Hessian at `params`.
    fn information(&self, params: &[f64]) -> Array2<f64>;
    /// Applies a cheap approximation of the inverse information at the most
    /// recently evaluated point to `v`. Returns `false` when none exists.
    fn precondition(&self, _v: &mut [f64]) -> bool {
        false
    }
}

/// Binary logistic log-likelihood over a design `x` and 0/1 labels `y`.
pub(crate) struct BinaryLogLik<'a> {
    pub x: ArrayView2<'a, f64>,
    pub y: ArrayView1<'a, f64>,
}

impl Objective for BinaryLogLik<'_> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn value(&self, params: &[f64]) -> f64 {
        let theta = ArrayView1::from(params);
        let eta = self.x.dot(&theta);
        eta.iter()
            .zip(self.y)
            .map(|(&e, &y)| y * e - softplus(e))
            .sum()
    }

    fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let theta = ArrayView1::from(params);
        let eta = self.x.dot(&theta);
        let mut value = 0.0;
        let mut resid = Array1::zeros(eta.len());
        for ((r, &e), &y) in resid.iter_mut().zip(&eta).zip(self.y) {
            value += y * e - softplus(e);
            *r = y - sigmoid(e);
        }
        let g = self.x.t().dot(&resid);
        grad.copy_from_slice(g.as_slice().expect("contiguous"));
        value
    }

    fn information(&self, params: &[f64]) -> Array2<f64> {
        let theta = ArrayView1::from(params);
        let eta = self.x.dot(&theta);
        let mut weighted = self.x.to_owned();
        for (mut row, &e) in weighted.rows_mut().into_iter().zip(&eta) {
            let mu = sigmoid(e);
            row *= mu * (1.0 - mu);
        }
        let mut info = weighted.t().dot(&self.x);
        symmetrize(&mut info);
        info
    }
}

/// Rows used to estimate the design second moment for preconditioning.
const MOMENT_ROWS_PER_FEATURE: usize = 50;

/// Multinomial log-likelihood with base class 0. Parameters are laid out
/// class-major: entries `k*p .. (k+1)*p` hold the coefficients of class `k+1`.
///
/// The information matrix is approximated by `N * (W_bar kron M)`, with
/// `W_bar` the average class-weight matrix `diag(pi) - pi pi'` at the last
/// evaluated point and `M` the design second moment. At the origin the
/// weights are constant across rows and the approximation is exact.
pub(crate) struct MultinomialLogLik<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [usize],
    k: usize,
    mean_weight: RefCell<Option<Array2<f64>>>,
    moment_factor: OnceCell<Option<Array2<f64>>>,
}

impl<'a> MultinomialLogLik<'a> {
    pub fn new(x: ArrayView2<'a, f64>, y: &'a [usize], k: usize) -> Self {
        Self {
            x,
            y,
            k,
            mean_weight: RefCell::new(None),
            moment_factor: OnceCell::new(),
        }
    }

    /// Cholesky factor of `X_s' X_s / m` over the leading `m` rows.
    fn moment_factor(&self) -> Option<&Array2<f64>> {
        self.moment_factor
            .get_or_init(|| {
                let p = self.x.ncols();
                let m = self
                    .x
                    .nrows()
                    .min((MOMENT_ROWS_PER_FEATURE * p).max(5_000));
                let rows = self.x.slice(s![..m, ..]);
                let mut moment = rows.t().dot(&rows);
                moment /= m as f64;
                symmetrize(&mut moment);
                cholesky_in_place(&mut moment).then_some(moment)
            })
            .as_ref()
    }

    fn coef<'p>(&self, params: &'p [f64]) -> ArrayView2<'p, f64> {
        ArrayView2::from_shape((self.k, self.x.ncols()), params).expect("parameter length")
    }

    /// Walks row blocks, handing each block's rows, labels, logits and
    /// working buffer to `visit`.
    fn for_each_block(
        &self,
        params: &[f64],
        mut visit: impl FnMut(ArrayView2<'_, f64>, &[usize], &Array2<f64>),
    ) {
        let bt = self.coef(params);
        let n = self.x.nrows();
        let mut logits = Array2::zeros((ROW_BLOCK.min(n), self.k));
        let mut start = 0;
        while start < n {
            let end = (start + ROW_BLOCK).min(n);
            let rows = self.x.slice(s![start..end, ..]);
            if logits.nrows() != end - start {
                logits = Array2::zeros((end - start, self.k));
            }
            general_mat_mul(1.0, &rows, &bt.t(), 0.0, &mut logits);
            visit(rows, &self.y[start..end], &logits);
            start = end;
        }
    }
}

impl Objective for MultinomialLogLik<'_> {
    fn dim(&self) -> usize {
        self.x.ncols() * self.k
    }

    fn value(&self, params: &[f64]) -> f64 {
        let mut value = 0.0;
        let mut probs = vec![0.0; self.k];
        self.for_each_block(params, |_, labels, logits| {
            for (row, &label) in logits.rows().into_iter().zip(labels) {
                let row = row.as_slice().expect("contiguous");
                let lse = softmax_with_base(row, &mut probs);
                let own = if label == 0 { 0.0 } else { row[label - 1] };
                value += own - lse;
            }
        });
        value
    }

    fn value_grad(&self, params: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.x.ncols();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let k = self.k;
        let mut gt = Array2::zeros((k, p));
        let mut weight = Array2::<f64>::zeros((k, k));
        let mut value = 0.0;
        let mut resid = Array2::<f64>::zeros((0, k));
        self.for_each_block(params, |rows, labels, logits| {
            if resid.nrows() != rows.nrows() {
                resid = Array2::zeros((rows.nrows(), self.k));
            }
            for ((row, mut r), &label) in logits
                .rows()
                .into_iter()
                .zip(resid.rows_mut())
                .zip(labels)
            {
                let row = row.as_slice().expect("contiguous");
                let r = r.as_slice_mut().expect("contiguous");
                let lse = softmax_with_base(row, r);
                let own = if label == 0 { 0.0 } else { row[label - 1] };
                value += own - lse;
                for a in 0..k {
                    weight[[a, a]] += r[a];
                    for b in 0..=a {
                        weight[[a, b]] -= r[a] * r[b];
                    }
                }
                for v in r.iter_mut() {
                    *v = -*v;
                }
                if label > 0 {
                    r[label - 1] += 1.0;
                }
            }
            general_mat_mul(1.0, &resid.t(), &rows, 1.0, &mut gt);
        });
        grad.copy_from_slice(gt.as_slice().expect("contiguous"));
        weight /= self.x.nrows() as f64;
        symmetrize(&mut weight);
        *self.mean_weight.borrow_mut() = Some(weight);
        value
    }

    fn precondition(&self, v: &mut [f64]) -> bool {
        let Some(weight) = self.mean_weight.borrow().clone() else {
            return false;
        };
        let mut w_factor = weight;
        if !cholesky_in_place(&mut w_factor) {
            return false;
        }
        let Some(m_factor) = self.moment_factor() else {
            return false;
        };
        let p = self.x.ncols();
        let k = self.k;
        for class in v.chunks_exact_mut(p) {
            let solved = cholesky_solve(m_factor, class);
            class.copy_from_slice(&solved);
        }
        let scale = 1.0 / self.x.nrows() as f64;
        let mut column = vec![0.0; k];
        for j in 0..p {
            for (a, c) in column.iter_mut().enumerate() {
                *c = v[a * p + j];
            }
            let solved = cholesky_solve(&w_factor, &column);
            for (a, s) in solved.iter().enumerate() {
                v[a * p + j] = s * scale;
            }
        }
        true
    }

    fn information(&self, params: &[f64]) -> Array2<f64> {
        let p = self.x.ncols();
        let k = self.k;
        let mut info = Array2::zeros((p * k, p * k));
        let mut probs = Array2::<f64>::zeros((0, k));
        let mut weighted = Array2::<f64>::zeros((0, p));
        self.for_each_block(params, |rows, _, logits| {
            if probs.nrows() != rows.nrows() {
                probs = Array2::zeros((rows.nrows(), k));
                weighted = Array2::zeros((rows.nrows(), p));
            }
            for (row, mut pr) in logits.rows().into_iter().zip(probs.rows_mut()) {
                softmax_with_base(
                    row.as_slice().expect("contiguous"),
                    pr.as_slice_mut().expect("contiguous"),
                );
            }
            for a in 0..k {
                for b in a..k {
                    for ((mut w_row, x_row), pr) in weighted
                        .rows_mut()
                        .into_iter()
                        .zip(rows.rows())
                        .zip(probs.rows())
                    {
                        let w = if a == b {
                            pr[a] * (1.0 - pr[a])
                        } else {
                            -pr[a] * pr[b]
                        };
                        w_row.zip_mut_with(&x_row, |o, &x| *o = w * x);
                    }
                    let mut block = info.slice_mut(s![a * p..(a + 1) * p, b * p..(b + 1) * p]);
                    general_mat_mul(1.0, &weighted.t(), &rows, 1.0, &mut block);
                }
            }
        });
        for a in 0..k {
            for b in (a + 1)..k {
                let upper = info
                    .slice(s![a * p..(a + 1) * p, b * p..(b + 1) * p])
                    .t()
                    .to_owned();
                info.slice_mut(s![b * p..(b + 1) * p, a * p..(a + 1) * p])
                    .assign(&upper);
            }
        }
        symmetrize(&mut info);
        info
    }
}

/// Copies the lower triangle onto the upper one so the matrix is exactly
/// symmetric.
fn symmetrize(m: &mut Array2<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            m[[j, i]] = m[[i, j]];
        }
    }
}

pub(crate) fn binary_loglik_design(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    theta: ArrayView1<'_, f64>,
) -> Result<f64> {
    check_dim("coefficient vector", x.ncols(), theta.len())?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "theta" });
    }
    let theta = theta.as_standard_layout();
    Ok(BinaryLogLik { x, y }.value(theta.as_slice().expect("contiguous")))
}

/// Binary logistic log-likelihood `sum_i [y_i x_i'theta - log(1 + exp(x_i'theta))]`.
pub fn binary_loglik(data: &TargetDataset, theta: ArrayView1<'_, f64>) -> Result<f64> {
    binary_loglik_design(data.x(), data.y(), theta)
}

/// Analytic gradient of [`binary_loglik`].
pub fn binary_gradient(data: &TargetDataset, theta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_dim("coefficient vector", data.p(), theta.len())?;
    let theta = theta.as_standard_layout();
    let mut grad = vec![0.0; data.p()];
    BinaryLogLik {
        x: data.x(),
        y: data.y(),
    }
    .value_grad(theta.as_slice().expect("contiguous"), &mut grad);
    Ok(Array1::from(grad))
}

fn class_major(data: &SourceDataset, b: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    check_dim("coefficient rows", data.p(), b.nrows())?;
    check_dim("coefficient columns", data.k(), b.ncols())?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "coefficient matrix",
        });
    }
    Ok(b.t().iter().copied().collect())
}

/// Multinomial log-likelihood of a `p x K` coefficient matrix whose column
/// `k` holds the coefficients of class `k+1` against base class 0.
pub fn multinomial_loglik(data: &SourceDataset, b: ArrayView2<'_, f64>) -> Result<f64> {
    let params = class_major(data, b)?;
    Ok(MultinomialLogLik::new(data.x(), data.labels(), data.k()).value(&params))
}

/// Analytic gradient of [`multinomial_loglik`] as a `p x K` matrix.
pub fn multinomial_gradient(data: &SourceDataset, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let params = class_major(data, b)?;
    let mut grad = vec![0.0; params.len()];
    MultinomialLogLik::new(data.x(), data.labels(), data.k()).value_grad(&params, &mut grad);
    Ok(Array2::from_shape_vec((data.k(), data.p()), grad)
        .expect("shape")
        .reversed_axes()
        .as_standard_layout()
        .into_owned())
}

/// Class probabilities for every row, base class first: an `N x (K+1)` matrix.
pub fn class_probabilities(x: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_dim("coefficient rows", x.ncols(), b.nrows())?;
    let logits = x.dot(&b);
    let k = b.ncols();
    let mut out = Array2::zeros((x.nrows(), k + 1));
    let mut probs = vec![0.0; k];
    for (row, mut o) in logits.rows().into_iter().zip(out.rows_mut()) {
        let row: Vec<f64> = row.to_vec();
        let lse = softmax_with_base(&row, &mut probs);
        o[0] = (-lse).exp();
        for (dst, &p) in o.iter_mut().skip(1).zip(&probs) {
            *dst = p;
        }
    }
    Ok(out)
}

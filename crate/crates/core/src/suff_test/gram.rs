use ndarray::{linalg::general_mat_mul, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Default ceiling on the number of rows for which the dense `n x n`
/// Gram matrix is built.
pub const DEFAULT_GRAM_CAP: usize = 20_000;

/// Pairwise inner products `G[i, j] = x_i' x_j` of the design rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    g: Array2<f64>,
}

impl GramMatrix {
    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.g.view()
    }

    /// Squared row norms `x_i' x_i`.
    pub fn diagonal(&self) -> ArrayView1<'_, f64> {
        self.g.diag()
    }

    pub fn n(&self) -> usize {
        self.g.nrows()
    }
}

pub fn gram(x: ArrayView2<'_, f64>) -> Result<GramMatrix> {
    gram_with_cap(x, DEFAULT_GRAM_CAP)
}

pub fn gram_with_cap(x: ArrayView2<'_, f64>, cap: usize) -> Result<GramMatrix> {
    let n = x.nrows();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let mut g = Array2::zeros((n, n));
    general_mat_mul(1.0, &x, &x.t(), 0.0, &mut g);
    for i in 0..n {
        for j in 0..i {
            g[[j, i]] = g[[i, j]];
        }
    }
    Ok(GramMatrix { g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identity_rows_give_identity() {
        let x = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert_eq!(gram(x.view()).unwrap().matrix(), array![[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn single_row_is_squared_norm() {
        let x = array![[3.0, 4.0]];
        assert_eq!(gram(x.view()).unwrap().matrix(), array![[25.0]]);
    }

    #[test]
    fn cap_enforced() {
        let x = Array2::<f64>::zeros((5, 2));
        assert!(matches!(gram_with_cap(x.view(), 4), Err(Error::CapExceeded { n: 5, cap: 4 })));
    }
}

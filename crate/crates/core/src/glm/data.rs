use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{check_dim, Error, Result};

/// Binary-response data: an `n x p` design with labels in `{0, 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDataset {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl TargetDataset {
    pub fn new(x: Array2<f64>, labels: &[u8]) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!(
                "design must be non-empty, got {n} x {p}"
            )));
        }
        check_dim("target labels", n, labels.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "target design",
            });
        }
        let mut y = Array1::zeros(n);
        for (row, (&l, slot)) in labels.iter().zip(y.iter_mut()).enumerate() {
            if l > 1 {
                return Err(Error::LabelOutOfRange {
                    row,
                    label: l as usize,
                    max: 1,
                });
            }
            *slot = f64::from(l);
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    /// Labels as `0.0` / `1.0`.
    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.y.iter().map(|&v| v as u8).collect()
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn has_both_labels(&self) -> bool {
        let ones = self.y.iter().filter(|&&v| v == 1.0).count();
        ones > 0 && ones < self.n()
    }

    /// Subtracts each column's sample mean; returns the means.
    pub fn center_columns(&mut self) -> Array1<f64> {
        center(&mut self.x)
    }
}

/// Multi-class data: an `N x p` design with labels in `{0, ..., K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceDataset {
    x: Array2<f64>,
    y: Vec<usize>,
    k: usize,
}

impl SourceDataset {
    /// `k` counts the non-base classes, so labels range over `0..=k`.
    pub fn new(x: Array2<f64>, labels: Vec<usize>, k: usize) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p == 0 {
            return Err(Error::InvalidData(format!(
                "design must be non-empty, got {n} x {p}"
            )));
        }
        if k == 0 {
            return Err(Error::InvalidData("K must be at least 1".into()));
        }
        check_dim("source labels", n, labels.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "source design",
            });
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l > k) {
            return Err(Error::LabelOutOfRange { row, label, max: k });
        }
        Ok(Self { x, y: labels, k })
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k + 1];
        for &l in &self.y {
            counts[l] += 1;
        }
        counts
    }

    /// First class in `0..=K` with no observations, if any.
    pub fn missing_class(&self) -> Option<usize> {
        self.class_counts().iter().position(|&c| c == 0)
    }

    pub fn center_columns(&mut self) -> Array1<f64> {
        center(&mut self.x)
    }
}

fn center(x: &mut Array2<f64>) -> Array1<f64> {
    let means = x.mean_axis(Axis(0)).expect("non-empty design");
    for mut row in x.rows_mut() {
        row -= &means;
    }
    means
}

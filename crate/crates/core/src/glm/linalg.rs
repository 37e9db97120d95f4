use ndarray::Array2;

/// In-place lower Cholesky factor of a symmetric positive definite matrix.
/// Only the lower triangle of `a` is read. Returns `false` when a pivot is
/// not strictly positive.
pub(crate) fn cholesky_in_place(a: &mut Array2<f64>) -> bool {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    let data = a.as_slice_mut().expect("standard layout");
    for j in 0..n {
        let mut diag = data[j * n + j];
        for v in &data[j * n..j * n + j] {
            diag -= v * v;
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return false;
        }
        let ljj = diag.sqrt();
        data[j * n + j] = ljj;
        for i in (j + 1)..n {
            let (upper, lower) = data.split_at_mut(i * n);
            let row_j = &upper[j * n..j * n + j];
            let row_i = &mut lower[..n];
            let mut s = row_i[j];
            for (a, b) in row_i[..j].iter().zip(row_j) {
                s -= a * b;
            }
            row_i[j] = s / ljj;
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            data[i * n + j] = 0.0;
        }
    }
    true
}

/// Solves `L L^T x = b` given the factor from [`cholesky_in_place`].
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: &[f64]) -> Vec<f64> {
    let n = l.nrows();
    let data = l.as_slice().expect("standard layout");
    let mut x = b.to_vec();
    for i in 0..n {
        let row = &data[i * n..i * n + i];
        let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
        x[i] = (x[i] - s) / data[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= data[k * n + i] * x[k];
        }
        x[i] = s / data[i * n + i];
    }
    x
}

/// Solves `a x = b` for symmetric positive (semi)definite `a`, retrying with a
/// growing diagonal jitter when the plain factorization breaks down.
pub(crate) fn solve_spd(a: &Array2<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let scale = a
        .diag()
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    for attempt in 0..8 {
        let mut work = a.as_standard_layout().into_owned();
        if attempt > 0 {
            let jitter = scale * 1e-14 * 10f64.powi(attempt);
            for d in work.diag_mut() {
                *d += jitter;
            }
        }
        if cholesky_in_place(&mut work) {
            let x = cholesky_solve(&work, b);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
    }
    None
}

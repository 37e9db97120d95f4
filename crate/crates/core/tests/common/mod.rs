//! Test-only data generation and naive reference formulas, kept independent
//! of the library's own random streams and kernels.
#![allow(dead_code)]

use ndarray::{Array1, Array2};

/// SplitMix64: small, fixed, and unaffected by dependency upgrades.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Box-Muller, one draw per call.
    pub fn normal(&mut self) -> f64 {
        let (u, v) = (self.uniform(), self.uniform());
        (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| self.normal())
    }

    pub fn vector(&mut self, len: usize) -> Array1<f64> {
        Array1::from_shape_fn(len, |_| self.normal())
    }
}

pub fn naive_sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `log(1 + e^t)` without overflow.
pub fn naive_softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Bernoulli labels from a logistic model with coefficient `theta`.
pub fn logistic_labels(rng: &mut Lcg, x: &Array2<f64>, theta: &[f64]) -> Vec<u8> {
    x.rows()
        .into_iter()
        .map(|row| {
            let eta = dot(row.as_slice().unwrap(), theta);
            u8::from(rng.uniform() < naive_sigmoid(eta))
        })
        .collect()
}

/// Categorical labels in `0..=K` from a multinomial logit with `p x K`
/// coefficients `b` and base class 0.
pub fn multinomial_labels(rng: &mut Lcg, x: &Array2<f64>, b: &Array2<f64>) -> Vec<usize> {
    let k = b.ncols();
    x.rows()
        .into_iter()
        .map(|row| {
            let mut w = vec![1.0];
            for c in 0..k {
                w.push(row.dot(&b.column(c)).exp());
            }
            let total: f64 = w.iter().sum();
            let u = rng.uniform() * total;
            let mut acc = 0.0;
            for (c, wc) in w.iter().enumerate() {
                acc += wc;
                if u < acc {
                    return c;
                }
            }
            k
        })
        .collect()
}

/// Resamples until both labels occur.
pub fn mixed_logistic_labels(rng: &mut Lcg, x: &Array2<f64>, theta: &[f64]) -> Vec<u8> {
    loop {
        let y = logistic_labels(rng, x, theta);
        if y.contains(&0) && y.contains(&1) {
            return y;
        }
    }
}

/// Resamples until every class occurs.
pub fn complete_multinomial_labels(rng: &mut Lcg, x: &Array2<f64>, b: &Array2<f64>) -> Vec<usize> {
    loop {
        let y = multinomial_labels(rng, x, b);
        if (0..=b.ncols()).all(|c| y.contains(&c)) {
            return y;
        }
    }
}

pub fn naive_binary_loglik(x: &Array2<f64>, y: &[u8], theta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, row) in x.rows().into_iter().enumerate() {
        let eta = dot(row.as_slice().unwrap(), theta);
        total += f64::from(y[i]) * eta - naive_softplus(eta);
    }
    total
}

/// Loops over rows and classes; `b` is `p x K`.
pub fn naive_multinomial_loglik(x: &Array2<f64>, y: &[usize], b: &Array2<f64>) -> f64 {
    let (n, p) = x.dim();
    let k = b.ncols();
    let mut total = 0.0;
    for i in 0..n {
        let mut logits = vec![0.0; k + 1];
        for c in 0..k {
            for j in 0..p {
                logits[c + 1] += x[[i, j]] * b[[j, c]];
            }
        }
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        total += logits[y[i]] - lse;
    }
    total
}

pub fn naive_multinomial_gradient(x: &Array2<f64>, y: &[usize], b: &Array2<f64>) -> Array2<f64> {
    let (n, p) = x.dim();
    let k = b.ncols();
    let mut g = Array2::zeros((p, k));
    for i in 0..n {
        let mut w = vec![1.0];
        for c in 0..k {
            let mut eta = 0.0;
            for j in 0..p {
                eta += x[[i, j]] * b[[j, c]];
            }
            w.push(eta.exp());
        }
        let total: f64 = w.iter().sum();
        for c in 0..k {
            let target = if y[i] == c + 1 { 1.0 } else { 0.0 };
            let r = target - w[c + 1] / total;
            for j in 0..p {
                g[[j, c]] += r * x[[i, j]];
            }
        }
    }
    g
}

/// Maximizes a concave function of two variables by successively finer
/// lattices centred on the incumbent.
pub fn grid_argmax(f: impl Fn(f64, f64) -> f64, centre: (f64, f64), half_width: f64, points: usize) -> (f64, f64) {
    let (mut ca, mut cb) = centre;
    let mut half = half_width;
    while half > 1e-9 {
        let step = 2.0 * half / (points - 1) as f64;
        let mut best = (f64::NEG_INFINITY, ca, cb);
        for i in 0..points {
            let a = ca - half + i as f64 * step;
            for j in 0..points {
                let b = cb - half + j as f64 * step;
                let v = f(a, b);
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        ca = best.1;
        cb = best.2;
        half = 2.0 * step;
    }
    (ca, cb)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

//! Synthetic source and target data.
//!
//! Covariates are zero-mean Gaussian with AR(1) covariance
//! `rho^{|j1 - j2|}`. Class directions are differences of random unit
//! vectors, `beta_k = u_k - u_0`, and target labels follow a logistic model
//! on `Z = B'X`, optionally perturbed along the first covariate by `delta`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::glm::{sigmoid, softmax_with_base, SourceDataset, TargetDataset};

/// Target coefficients on the `K = 8` transferred features used by the
/// reference simulation design.
pub const PAPER_GAMMA: [f64; 8] = [0.5, 0.5, 0.5, 0.5, 0.5, -1.25, 0.0, 0.0];

/// Leading `k` entries of [`PAPER_GAMMA`], zero-padded past eight.
pub fn default_gamma(k: usize) -> Array1<f64> {
    Array1::from_iter((0..k).map(|i| PAPER_GAMMA.get(i).copied().unwrap_or(0.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub p: usize,
    pub k: usize,
    pub rho: f64,
    pub gamma: Array1<f64>,
    /// Coefficient of `x_1` in the target logit; zero gives the null model.
    pub delta: f64,
    pub base_seed: u64,
}

impl GenSpec {
    pub fn new(p: usize, k: usize) -> Self {
        Self {
            p,
            k,
            rho: 0.5,
            gamma: default_gamma(k),
            delta: 0.0,
            base_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 || self.k == 0 {
            return Err(Error::InvalidData("p and K must be positive".into()));
        }
        if !(self.rho.abs() < 1.0) {
            return Err(Error::InvalidData(format!("|rho| must be < 1, got {}", self.rho)));
        }
        if self.gamma.len() != self.k {
            return Err(Error::DimensionMismatch {
                what: "gamma",
                expected: self.k,
                found: self.gamma.len(),
            });
        }
        if !self.delta.is_finite() || self.delta < 0.0 {
            return Err(Error::InvalidData(format!("delta must be >= 0, got {}", self.delta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// `p x K`; column `k` is `beta_{k+1}`.
    pub b: Array2<f64>,
    /// `B * gamma`.
    pub theta: Array1<f64>,
    /// The normalized base direction subtracted from every column.
    pub beta0_dir: Array1<f64>,
}

/// `count` i.i.d. rows from `N(0, Sigma)` with `Sigma[j1, j2] = rho^{|j1-j2|}`,
/// built by the stationary recursion `x_j = rho x_{j-1} + sqrt(1-rho^2) z_j`.
pub fn sample_ar1_rows<R: Rng + ?Sized>(count: usize, p: usize, rho: f64, rng: &mut R) -> Array2<f64> {
    assert!(rho.abs() < 1.0, "AR(1) needs |rho| < 1");
    let innovation = (1.0 - rho * rho).sqrt();
    let mut x = Array2::zeros((count, p));
    for mut row in x.rows_mut() {
        let row = row.as_slice_mut().expect("standard layout");
        let mut prev = 0.0;
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            prev = if j == 0 { z } else { rho * prev + innovation * z };
            *v = prev;
        }
    }
    x
}

fn unit_normal_vector<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Array1<f64> {
    let v: Array1<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = v.dot(&v).sqrt();
    v / norm
}

/// Draws `beta~_0, ..., beta~_K` with standard normal entries and sets
/// `beta_k = beta~_k / |beta~_k| - beta~_0 / |beta~_0|`.
pub fn gen_coefficients<R: Rng + ?Sized>(spec: &GenSpec, rng: &mut R) -> Result<GroundTruth> {
    spec.validate()?;
    let beta0_dir = unit_normal_vector(spec.p, rng);
    let mut b = Array2::zeros((spec.p, spec.k));
    for mut col in b.axis_iter_mut(Axis(1)) {
        let u = unit_normal_vector(spec.p, rng);
        col.assign(&(&u - &beta0_dir));
    }
    let theta = b.dot(&spec.gamma);
    Ok(GroundTruth { b, theta, beta0_dir })
}

/// Source sample: AR(1) covariates, then one uniform per row mapped through
/// the cumulative class probabilities (class order `0..=K`).
pub fn gen_source<R: Rng + ?Sized>(
    big_n: usize,
    spec: &GenSpec,
    truth: &GroundTruth,
    rng: &mut R,
) -> Result<SourceDataset> {
    spec.validate()?;
    if big_n < spec.k + 1 {
        return Err(Error::TooFewSamples {
            n: big_n,
            min: spec.k + 1,
        });
    }
    let x = sample_ar1_rows(big_n, spec.p, spec.rho, rng);
    let logits = x.dot(&truth.b);
    let mut probs = vec![0.0; spec.k];
    let mut labels = Vec::with_capacity(big_n);
    for row in logits.rows() {
        let row = row.as_slice().expect("standard layout");
        let lse = softmax_with_base(row, &mut probs);
        let u: f64 = rng.random();
        let mut cumulative = (-lse).exp();
        let mut label = spec.k;
        if u < cumulative {
            label = 0;
        } else {
            for (k, &pk) in probs.iter().enumerate().take(spec.k - 1) {
                cumulative += pk;
                if u < cumulative {
                    label = k + 1;
                    break;
                }
            }
        }
        labels.push(label);
    }
    SourceDataset::new(x, labels, spec.k)
}

/// Target sample: AR(1) covariates, then `y_i = 1{u_i < g(z_i' gamma + delta x_i1)}`.
/// Only the labels depend on `delta`, so one stream yields the null and every
/// alternative on the same covariates.
pub fn gen_target<R: Rng + ?Sized>(
    n: usize,
    spec: &GenSpec,
    truth: &GroundTruth,
    rng: &mut R,
) -> Result<TargetDataset> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::TooFewSamples { n, min: 2 });
    }
    let x = sample_ar1_rows(n, spec.p, spec.rho, rng);
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let labels = target_labels(&x, &uniforms, spec, truth, spec.delta);
    TargetDataset::new(x, &labels)
}

/// Draws covariates and uniforms once and labels them under every `delta`.
pub fn gen_target_family<R: Rng + ?Sized>(
    n: usize,
    spec: &GenSpec,
    truth: &GroundTruth,
    deltas: &[f64],
    rng: &mut R,
) -> Result<Vec<TargetDataset>> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::TooFewSamples { n, min: 2 });
    }
    let x = sample_ar1_rows(n, spec.p, spec.rho, rng);
    let uniforms: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    deltas
        .iter()
        .map(|&d| {
            let labels = target_labels(&x, &uniforms, spec, truth, d);
            TargetDataset::new(x.clone(), &labels)
        })
        .collect()
}

fn target_labels(
    x: &Array2<f64>,
    uniforms: &[f64],
    spec: &GenSpec,
    truth: &GroundTruth,
    delta: f64,
) -> Vec<u8> {
    let eta = x.dot(&truth.b.dot(&spec.gamma));
    eta.iter()
        .zip(x.column(0))
        .zip(uniforms)
        .map(|((&e, &x1), &u)| u8::from(u < sigmoid(e + delta * x1)))
        .collect()
}

/// Monte Carlo estimates of `tr(Sigma_gamma)` and `tr(Sigma_gamma^2)` for
/// `Sigma_gamma = E[g(1-g) X X']` under the null, from `samples` fresh rows.
/// The squared trace uses the unbiased off-diagonal form.
pub fn population_traces<R: Rng + ?Sized>(
    spec: &GenSpec,
    truth: &GroundTruth,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    spec.validate()?;
    if samples < 2 {
        return Err(Error::TooFewSamples { n: samples, min: 2 });
    }
    let mut a = sample_ar1_rows(samples, spec.p, spec.rho, rng);
    let eta = a.dot(&truth.b.dot(&spec.gamma));
    let mut sq_norms = Vec::with_capacity(samples);
    for (mut row, &e) in a.rows_mut().into_iter().zip(&eta) {
        let mu = sigmoid(e);
        row *= (mu * (1.0 - mu)).sqrt();
        sq_norms.push(row.dot(&row));
    }
    let m = samples as f64;
    let trace = sq_norms.iter().sum::<f64>() / m;
    let s = a.t().dot(&a);
    let frob_sq: f64 = s.iter().map(|v| v * v).sum();
    let fourth: f64 = sq_norms.iter().map(|v| v * v).sum();
    Ok((trace, (frob_sq - fourth) / (m * (m - 1.0))))
}

//! Standard normal distribution function and quantile.

use libm::erfc;

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// `P(Z <= x)` for standard normal `Z`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail `P(Z > x)`, accurate where `1 - normal_cdf(x)` would cancel.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

// Acklam's rational approximation, relative error about 1.15e-9.
const A: [f64; 6] = [
    -3.969683028665376e+01,
    2.209460984245205e+02,
    -2.759285104469687e+02,
    1.383577518672690e+02,
    -3.066479806614716e+01,
    2.506628277459239e+00,
];
const B: [f64; 5] = [
    -5.447609879822406e+01,
    1.615858368580409e+02,
    -1.556989798598866e+02,
    6.680131188771972e+01,
    -1.328068155288572e+01,
];
const C: [f64; 6] = [
    -7.784894002430293e-03,
    -3.223964580411365e-01,
    -2.400758277161838e+00,
    -2.549732539343734e+00,
    4.374664141464968e+00,
    2.938163982698783e+00,
];
const D: [f64; 4] = [
    7.784695709041462e-03,
    3.224671290700398e-01,
    2.445134137142996e+00,
    3.754408661907416e+00,
];
const TAIL: f64 = 0.02425;

fn tail_approx(q: f64) -> f64 {
    let t = (-2.0 * q.ln()).sqrt();
    (((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
        / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
}

/// Inverse of [`normal_cdf`] on `(0, 1)`: a rational first guess polished by
/// two Halley steps.
pub fn normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::DomainError { value: q });
    }
    let guess = if q < TAIL {
        tail_approx(q)
    } else if q > 1.0 - TAIL {
        -tail_approx(1.0 - q)
    } else {
        let u = q - 0.5;
        let r = u * u;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * u
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    Ok(polish(polish(guess, q), q))
}

/// One Halley step on the distribution function, working in whichever tail
/// keeps the residual free of cancellation.
fn polish(x: f64, q: f64) -> f64 {
    let err = if x <= 0.0 {
        normal_cdf(x) - q
    } else {
        (1.0 - q) - normal_sf(x)
    };
    let u = err / normal_pdf(x);
    x - u / (1.0 + 0.5 * x * u)
}

//! Numerically stable logistic building blocks.

/// Logistic function `exp(x) / (1 + exp(x))`.
///
/// Evaluated on the branch that never exponentiates a positive argument, so
/// it saturates cleanly at both ends instead of producing `inf / inf`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x < 0.0 {
        let e = x.exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + (-x).exp())
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `log(1 + sum_k exp(logits[k]))`: log-sum-exp over the logits plus an
/// implicit base-class logit fixed at zero.
#[inline]
pub fn log_sum_exp_with_base(logits: &[f64]) -> f64 {
    let m = logits.iter().copied().fold(0.0f64, f64::max);
    let mut acc = (-m).exp();
    for &l in logits {
        acc += (l - m).exp();
    }
    m + acc.ln()
}

/// Writes the non-base class probabilities for one row into `probs` and
/// returns the log normalizer. The base-class probability is
/// `1 - probs.sum()`, or `exp(-lse)`.
#[inline]
pub fn softmax_with_base(logits: &[f64], probs: &mut [f64]) -> f64 {
    let lse = log_sum_exp_with_base(logits);
    for (p, &l) in probs.iter_mut().zip(logits) {
        *p = (l - lse).exp();
    }
    lse
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_reference_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        let hi = sigmoid(710.0);
        assert!(hi.is_finite() && (1.0 - hi).abs() < 1e-15);
        let lo = sigmoid(-710.0);
        assert!(lo >= 0.0 && lo < 1e-300);
        for x in [-30.0, -2.5, -0.1, 0.1, 2.5, 30.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for x in [-20.0, -1.0, 0.0, 0.5, 3.0, 20.0] {
            let naive = (1.0 + f64::exp(x)).ln();
            assert!((softplus(x) - naive).abs() < 1e-14, "x = {x}");
        }
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = [800.0, -3.0, 0.2];
        let mut probs = [0.0; 3];
        let lse = softmax_with_base(&logits, &mut probs);
        let base = (-lse).exp();
        assert!((probs.iter().sum::<f64>() + base - 1.0).abs() < 1e-12);
        assert!(lse.is_finite());
    }
}

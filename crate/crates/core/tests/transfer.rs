mod common;

use common::*;
use ndarray::{array, Array1, Array2};
use proptest::prelude::*;
use tlsuff::glm::sigmoid;
use tlsuff::transfer::{make_features, mse, plugin_scale};
use tlsuff::{
    fit_binary_logistic, fit_multinomial_logistic, fit_transfer, oracle_fit, Error, FitOptions,
    SourceDataset, SourceModel, TargetDataset,
};

fn triple_loop_product(x: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (n, p) = x.dim();
    let k = b.ncols();
    let mut z = Array2::zeros((n, k));
    for i in 0..n {
        for c in 0..k {
            for j in 0..p {
                z[[i, c]] += x[[i, j]] * b[[j, c]];
            }
        }
    }
    z
}

/// n = 100, p = 6, K = 2 problem whose labels follow the working model.
fn grid_problem() -> (Array2<f64>, Array2<f64>, Vec<u8>) {
    let mut rng = Lcg::new(100);
    let b = rng.matrix(6, 2) * 0.5;
    let x = rng.matrix(100, 6);
    let z = triple_loop_product(&x, &b);
    let y = mixed_logistic_labels(&mut rng, &z, &[0.7, -0.4]);
    (b, x, y)
}

/// Lattice-search maximizer of the working likelihood for [`grid_problem`].
const GAMMA_GRID_ARGMAX: [f64; 2] = [5.23966814617599974e-1, -5.49677814579199620e-1];

#[test]
fn features_match_triple_loop() {
    let mut rng = Lcg::new(3);
    let b = rng.matrix(3, 2);
    let x = rng.matrix(2, 3);
    let z = make_features(b.view(), x.view()).unwrap();
    let oracle = triple_loop_product(&x, &b);
    assert!(max_abs_diff(z.as_slice().unwrap(), oracle.as_slice().unwrap()) < 1e-14);
}

#[test]
fn gamma_matches_grid_search() {
    let (b, x, y) = grid_problem();
    let z = triple_loop_product(&x, &b);
    let oracle = grid_argmax(|g1, g2| naive_binary_loglik(&z, &y, &[g1, g2]), (0.0, 0.0), 5.0, 101);
    assert!(max_abs_diff(&[oracle.0, oracle.1], &GAMMA_GRID_ARGMAX) < 1e-6);

    let data = TargetDataset::new(x, &y).unwrap();
    let fit = fit_transfer(&SourceModel::from_coefficients(b.clone()).unwrap(), &data, &FitOptions::default()).unwrap();
    assert!(max_abs_diff(fit.gamma.as_slice().unwrap(), &GAMMA_GRID_ARGMAX) < 1e-3);
    // theta = B gamma, entrywise.
    for (j, t) in fit.theta.iter().enumerate() {
        let direct = b[[j, 0]] * fit.gamma[0] + b[[j, 1]] * fit.gamma[1];
        assert!((t - direct).abs() <= 1e-12);
    }
}

#[test]
fn oracle_with_the_estimate_is_the_transfer_fit() {
    let (b, x, y) = grid_problem();
    let data = TargetDataset::new(x, &y).unwrap();
    let model = SourceModel::from_coefficients(b).unwrap();
    let a = fit_transfer(&model, &data, &FitOptions::default()).unwrap();
    let o = oracle_fit(model.b.view(), &data, &FitOptions::default()).unwrap();
    assert_eq!(a, o);
    let again = fit_transfer(&model, &data, &FitOptions::default()).unwrap();
    assert_eq!(a.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), again.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn one_feature_reduces_to_scalar_logistic() {
    let (b, x, y) = grid_problem();
    let col = b.column(0).to_owned().insert_axis(ndarray::Axis(1));
    let data = TargetDataset::new(x.clone(), &y).unwrap();
    let fit = oracle_fit(col.view(), &data, &FitOptions::default()).unwrap();
    let scalar = TargetDataset::new(triple_loop_product(&x, &col), &y).unwrap();
    let (gamma, _) = fit_binary_logistic(&scalar, &FitOptions::default()).unwrap();
    assert!((fit.gamma[0] - gamma[0]).abs() < 1e-12);
}

#[test]
fn estimates_are_invariant_to_reparametrizing_the_basis() {
    let (b, x, y) = grid_problem();
    let data = TargetDataset::new(x, &y).unwrap();
    let a = array![[2.0, 0.5], [-1.0, 1.5]];
    let opts = FitOptions::default();
    let base = oracle_fit(b.view(), &data, &opts).unwrap();
    let rotated = oracle_fit(b.dot(&a).view(), &data, &opts).unwrap();
    let mapped = a.dot(&rotated.gamma);
    assert!(max_abs_diff(mapped.as_slice().unwrap(), base.gamma.as_slice().unwrap()) < 1e-6);
    assert!(max_abs_diff(rotated.theta.as_slice().unwrap(), base.theta.as_slice().unwrap()) < 1e-6);
    let probs = |fit: &tlsuff::TransferFit| fit.z.dot(&fit.gamma).mapv(sigmoid);
    assert!(max_abs_diff(probs(&base).as_slice().unwrap(), probs(&rotated).as_slice().unwrap()) < 1e-8);
}

#[test]
fn theta_lies_in_the_column_space() {
    let mut rng = Lcg::new(17);
    let b = rng.matrix(12, 3);
    let x = rng.matrix(200, 12);
    let theta_true = b.dot(&array![0.3, -0.2, 0.1]);
    let y = mixed_logistic_labels(&mut rng, &x, theta_true.as_slice().unwrap());
    let fit = oracle_fit(b.view(), &TargetDataset::new(x, &y).unwrap(), &FitOptions::default()).unwrap();
    // Least-squares projection onto span(B) via the normal equations.
    let btb = b.t().dot(&b);
    let rhs = b.t().dot(&fit.theta);
    let coef = solve3(&btb, &rhs);
    let resid = &fit.theta - &b.dot(&coef);
    assert!(resid.dot(&resid).sqrt() <= 1e-10);
}

fn solve3(a: &Array2<f64>, r: &Array1<f64>) -> Array1<f64> {
    // Cramer's rule keeps the oracle independent of the library's solvers.
    let det = |m: &Array2<f64>| {
        m[[0, 0]] * (m[[1, 1]] * m[[2, 2]] - m[[1, 2]] * m[[2, 1]])
            - m[[0, 1]] * (m[[1, 0]] * m[[2, 2]] - m[[1, 2]] * m[[2, 0]])
            + m[[0, 2]] * (m[[1, 0]] * m[[2, 1]] - m[[1, 1]] * m[[2, 0]])
    };
    let d = det(a);
    Array1::from_shape_fn(3, |c| {
        let mut m = a.clone();
        m.column_mut(c).assign(r);
        det(&m) / d
    })
}

#[test]
fn mse_matches_loop() {
    let mut rng = Lcg::new(4);
    let a = rng.vector(25);
    let b = rng.vector(25);
    let mut acc = 0.0;
    for j in 0..25 {
        acc += (a[j] - b[j]).powi(2);
    }
    assert!((mse(a.view(), b.view()).unwrap() - acc / 25.0).abs() < 1e-15);
    assert!(matches!(mse(a.view(), b.slice(ndarray::s![..3]).view()), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn plugin_scale_matches_explicit_inverse() {
    let (b, x, y) = grid_problem();
    let data = TargetDataset::new(x, &y).unwrap();
    let fit = oracle_fit(b.view(), &data, &FitOptions::default()).unwrap();
    let n = data.n() as f64;
    let mut info = [[0.0; 2]; 2];
    for i in 0..data.n() {
        let z = [fit.z[[i, 0]], fit.z[[i, 1]]];
        let mu = naive_sigmoid(z[0] * fit.gamma[0] + z[1] * fit.gamma[1]);
        for r in 0..2 {
            for c in 0..2 {
                info[r][c] += mu * (1.0 - mu) * z[r] * z[c] / n;
            }
        }
    }
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    let inv = [[info[1][1] / det, -info[0][1] / det], [-info[1][0] / det, info[0][0] / det]];
    let v = Array1::from_shape_fn(6, |j| (j as f64) - 2.5);
    let u = b.t().dot(&v);
    let var = (0..2).map(|r| (0..2).map(|c| u[r] * inv[r][c] * u[c]).sum::<f64>()).sum::<f64>();
    let got = plugin_scale(b.view(), &fit, v.view()).unwrap();
    assert!((got - var.sqrt()).abs() < 1e-10 * var.sqrt());
}

#[test]
fn too_few_target_samples_for_the_features() {
    let b = Array2::from_elem((3, 4), 0.1);
    let data = TargetDataset::new(Array2::from_shape_fn((4, 3), |(i, j)| (i + j) as f64), &[0, 1, 0, 1]).unwrap();
    assert!(fit_transfer(&SourceModel::from_coefficients(b).unwrap(), &data, &FitOptions::default()).is_err());
    let wrong_p = Array2::from_elem((5, 1), 0.1);
    assert!(matches!(
        oracle_fit(wrong_p.view(), &data, &FitOptions::default()),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn oracle_gamma_error_shrinks_like_one_over_root_n() {
    // Mean squared error of gamma_hat over 500 replications at n and 4n.
    let b = array![[1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [0.0, -0.5]];
    let gamma = [0.8, -0.6];
    let theta = b.dot(&array![gamma[0], gamma[1]]);
    let mut rng = Lcg::new(2718);
    let mut mses = Vec::new();
    for n in [250, 1000] {
        let mut acc = 0.0;
        for _ in 0..500 {
            let x = rng.matrix(n, 4);
            let y = mixed_logistic_labels(&mut rng, &x, theta.as_slice().unwrap());
            let fit = oracle_fit(b.view(), &TargetDataset::new(x, &y).unwrap(), &FitOptions::default()).unwrap();
            acc += (fit.gamma[0] - gamma[0]).powi(2) + (fit.gamma[1] - gamma[1]).powi(2);
        }
        mses.push(acc / 500.0);
    }
    let ratio = mses[0] / mses[1];
    assert!(ratio > 3.0 && ratio < 5.5, "MSE ratio {ratio} for a fourfold n");
}

#[test]
fn transfer_approaches_oracle_as_the_source_grows() {
    let (p, k, n) = (8, 2, 200);
    let mut rng = Lcg::new(99);
    let b_true = rng.matrix(p, k) * 0.4;
    let theta = b_true.dot(&array![1.0, -1.0]);
    let mut medians = Vec::new();
    for big_n in [2_000, 20_000] {
        let mut gaps: Vec<f64> = (0..15)
            .map(|_| {
                let xs = rng.matrix(big_n, p);
                let ys = complete_multinomial_labels(&mut rng, &xs, &b_true);
                let model = fit_multinomial_logistic(&SourceDataset::new(xs, ys, k).unwrap(), &FitOptions::default()).unwrap();
                let x = rng.matrix(n, p);
                let y = mixed_logistic_labels(&mut rng, &x, theta.as_slice().unwrap());
                let data = TargetDataset::new(x, &y).unwrap();
                let tl = fit_transfer(&model, &data, &FitOptions::default()).unwrap();
                let or = oracle_fit(b_true.view(), &data, &FitOptions::default()).unwrap();
                let d = &tl.gamma - &or.gamma;
                d.dot(&d).sqrt()
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        medians.push(gaps[7]);
    }
    assert!(medians[1] < medians[0], "median gaps {medians:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reparametrization_invariance(seed in any::<u64>(), a00 in 0.5f64..3.0, a01 in -1.0f64..1.0, a10 in -1.0f64..1.0, a11 in 0.5f64..3.0) {
        let a = array![[a00, a01], [a10, a11]];
        prop_assume!((a00 * a11 - a01 * a10).abs() > 0.2);
        let mut rng = Lcg::new(seed);
        let b = rng.matrix(5, 2) * 0.5;
        let x = rng.matrix(150, 5);
        let theta = b.dot(&array![0.5, -0.5]);
        let y = mixed_logistic_labels(&mut rng, &x, theta.as_slice().unwrap());
        let data = TargetDataset::new(x, &y).unwrap();
        let base = oracle_fit(b.view(), &data, &FitOptions::default());
        let rot = oracle_fit(b.dot(&a).view(), &data, &FitOptions::default());
        if let (Ok(base), Ok(rot)) = (base, rot) {
            prop_assert!(max_abs_diff(a.dot(&rot.gamma).as_slice().unwrap(), base.gamma.as_slice().unwrap()) < 1e-6);
            prop_assert!(max_abs_diff(rot.theta.as_slice().unwrap(), base.theta.as_slice().unwrap()) < 1e-6);
        }
    }

    #[test]
    fn mse_is_mean_of_squares(v in proptest::collection::vec(-1e3f64..1e3, 1..40)) {
        let a = Array1::from(v.clone());
        let zero = Array1::zeros(v.len());
        let expected = v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        prop_assert!((mse(a.view(), zero.view()).unwrap() - expected).abs() <= 1e-12 * expected.max(1.0));
        prop_assert_eq!(mse(a.view(), a.view()).unwrap(), 0.0);
    }
}

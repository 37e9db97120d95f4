//! Estimate a 40-dimensional target coefficient from 400 labels three ways:
//! plain maximum likelihood, the transferred estimator built on a fitted
//! source model, and the oracle that knows the true source coefficients.

use ndarray::Array1;
use tlsuff::rng::{stream, Purpose};
use tlsuff::simgen::{gen_coefficients, gen_source, gen_target, GenSpec};
use tlsuff::transfer::{mse, plugin_scale};
use tlsuff::{fit_binary_logistic, fit_multinomial_logistic, fit_transfer, oracle_fit, FitOptions};

fn main() -> tlsuff::Result<()> {
    let (p, k, n, big_n) = (40, 4, 400, 40_000);
    let spec = GenSpec::new(p, k);
    let opts = FitOptions::default();
    let truth = gen_coefficients(&spec, &mut stream(11, 0, 0, Purpose::Coefficients))?;
    let source = gen_source(big_n, &spec, &truth, &mut stream(11, 0, 0, Purpose::SourceData))?;
    let target = gen_target(n, &spec, &truth, &mut stream(11, 0, 0, Purpose::TargetData))?;

    let model = fit_multinomial_logistic(&source, &opts)?;
    let (theta_mle, _) = fit_binary_logistic(&target, &opts)?;
    let tl = fit_transfer(&model, &target, &opts)?;
    let oracle = oracle_fit(truth.b.view(), &target, &opts)?;

    println!("gamma (true)     {:.3}", spec.gamma);
    println!("gamma (transfer) {:.3}", tl.gamma);
    println!("gamma (oracle)   {:.3}", oracle.gamma);
    for (name, theta) in [("mle", &theta_mle), ("transfer", &tl.theta), ("oracle", &oracle.theta)] {
        println!("log MSE {name:<9} {:.3}", mse(theta.view(), truth.theta.view())?.ln());
    }

    // Plug-in standard error of the first coordinate of theta.
    let mut e1 = Array1::zeros(p);
    e1[0] = 1.0;
    let se = plugin_scale(model.b.view(), &tl, e1.view())? / (n as f64).sqrt();
    println!(
        "theta_1: estimate {:.4} +/- {:.4} (truth {:.4})",
        tl.theta[0],
        1.96 * se,
        truth.theta[0]
    );
    Ok(())
}

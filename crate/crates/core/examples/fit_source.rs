//! Fit the multinomial source model on simulated data and compare the
//! estimate with the coefficients that generated it.
//!
//! ```text
//! cargo run --release --example fit_source -- [p] [K] [N]
//! ```

use tlsuff::rng::{stream, Purpose};
use tlsuff::simgen::{gen_coefficients, gen_source, GenSpec};
use tlsuff::{fit_multinomial_logistic, FitOptions};

fn arg(i: usize, default: usize) -> usize {
    std::env::args().nth(i).map_or(default, |s| s.parse().expect("integer argument"))
}

fn main() -> tlsuff::Result<()> {
    let (p, k, big_n) = (arg(1, 20), arg(2, 3), arg(3, 50_000));
    let spec = GenSpec::new(p, k);
    let truth = gen_coefficients(&spec, &mut stream(7, 0, 0, Purpose::Coefficients))?;
    let source = gen_source(big_n, &spec, &truth, &mut stream(7, 0, 0, Purpose::SourceData))?;
    println!("class counts: {:?}", source.class_counts());

    let started = std::time::Instant::now();
    let model = fit_multinomial_logistic(&source, &FitOptions::default())?;
    let diag = model.diagnostics.as_ref().unwrap();
    println!(
        "{:?} solver, {} iterations in {:.2?}, stop: {:?}, gradient sup-norm {:.2e}",
        diag.solver,
        diag.iterations,
        started.elapsed(),
        diag.stop_reason,
        diag.final_grad_norm
    );
    let err = (&model.b - &truth.b).mapv(|v| v * v).sum().sqrt();
    println!("|B_hat - B|_F = {err:.4}   (sqrt(pK/N) = {:.4})", ((p * k) as f64 / big_n as f64).sqrt());
    Ok(())
}

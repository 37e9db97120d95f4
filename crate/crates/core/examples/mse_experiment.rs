//! Monte Carlo comparison of log-MSE for the MLE, transferred and oracle
//! estimators as the source sample grows.
//!
//! ```text
//! cargo run --release --example mse_experiment -- [B_reps]
//! ```

use tlsuff::harness::{run, Aggregates, ExperimentConfig, ExperimentKind};

fn main() -> tlsuff::Result<()> {
    env_logger::init();
    let reps = std::env::args().nth(1).map_or(40, |s| s.parse().expect("integer"));
    for big_n in [20_000, 40_000, 80_000] {
        let mut cfg = ExperimentConfig::desk(ExperimentKind::Mse);
        cfg.big_n = big_n;
        cfg.b_reps = reps;
        let result = run(&cfg)?;
        let Aggregates::Mse(list) = &result.aggregates else { unreachable!() };
        let cells: Vec<String> = list
            .iter()
            .map(|s| format!("{} {:.3} [{:.3}, {:.3}]", s.estimator.as_str(), s.median_log_mse, s.q1_log_mse, s.q3_log_mse))
            .collect();
        println!("N = {big_n:>6}: {}", cells.join("  "));
    }
    Ok(())
}

//! Empirical power against the `x1` alternative for two target sizes.
//!
//! ```text
//! cargo run --release --example power_experiment -- [B_reps]
//! ```

use tlsuff::harness::{run, Aggregates, ExperimentConfig, ExperimentKind};

fn main() -> tlsuff::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let reps = std::env::args().nth(1).map_or(30, |s| s.parse().expect("integer"));
    for n in [200, 500] {
        let mut cfg = ExperimentConfig::desk(ExperimentKind::Power);
        cfg.n = n;
        cfg.b_reps = reps;
        let result = run(&cfg)?;
        let Aggregates::Power(points) = &result.aggregates else { unreachable!() };
        for pt in points {
            println!("n = {n}  delta = {}  EJP = {:.3}", pt.delta, pt.ejp);
        }
    }
    Ok(())
}

//! Empirical size of the sufficiency test under the null, for the test on
//! fitted features and for the oracle on the true ones. The `t3` row
//! standardizes by a simulated population trace instead of the estimate.
//!
//! ```text
//! cargo run --release --example size_experiment -- [B_reps] [out_prefix]
//! ```

use std::path::PathBuf;

use tlsuff::harness::{run, write_outputs, Aggregates, ExperimentConfig, ExperimentKind};

fn main() -> tlsuff::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let mut cfg = ExperimentConfig::desk(ExperimentKind::Size);
    cfg.b_reps = args.next().map_or(50, |s| s.parse().expect("integer"));
    cfg.t3_diagnostic = true;
    let result = run(&cfg)?;
    let Aggregates::Size(tests) = &result.aggregates else { unreachable!() };
    for t in tests {
        println!(
            "{:<9} EJP {:.3}  mean T {:+.3}  var T {:.3}  ({} replications)",
            t.test, t.ejp, t.mean, t.variance, t.successes
        );
    }
    if let Some(prefix) = args.next() {
        let paths = write_outputs(&result, &PathBuf::from(prefix))?;
        println!("records in {}", paths.records.display());
    }
    Ok(())
}

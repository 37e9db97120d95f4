//! Export a simulated source/target pair and the generating coefficients
//! as CSV files that `tlsuff fit-source` and `tlsuff test` read.
//!
//! ```text
//! cargo run --example generate_datasets -- [out_dir]
//! ```

use std::path::PathBuf;

use tlsuff::io::{write_matrix_csv, write_source_csv, write_target_csv};
use tlsuff::rng::{stream, Purpose};
use tlsuff::simgen::{gen_coefficients, gen_source, gen_target, GenSpec};

fn main() -> tlsuff::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "generated".into()));
    std::fs::create_dir_all(&dir).expect("create output directory");
    let seed = 2024;
    let spec = GenSpec::new(10, 3);
    let truth = gen_coefficients(&spec, &mut stream(seed, 0, 0, Purpose::Coefficients))?;
    let source = gen_source(5_000, &spec, &truth, &mut stream(seed, 0, 0, Purpose::SourceData))?;
    let target = gen_target(200, &spec, &truth, &mut stream(seed, 0, 0, Purpose::TargetData))?;
    write_source_csv(&dir.join("source.csv"), &source)?;
    write_target_csv(&dir.join("target.csv"), &target)?;
    write_matrix_csv(&dir.join("truth.csv"), &truth.b)?;
    println!("wrote source.csv, target.csv and truth.csv to {}", dir.display());
    Ok(())
}

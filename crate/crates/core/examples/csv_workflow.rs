//! The file-based workflow for features extracted elsewhere: read a source
//! CSV, fit and save the model, reload it, and test a target CSV against it.
//! Simulated files stand in for real embeddings here.

use tlsuff::io::{read_model_csv, read_source_csv, read_target_csv, write_model_csv, write_source_csv, write_target_csv};
use tlsuff::rng::{stream, Purpose};
use tlsuff::simgen::{gen_coefficients, gen_source, gen_target, GenSpec};
use tlsuff::{fit_multinomial_logistic, test_sufficiency, FitOptions};

fn main() -> tlsuff::Result<()> {
    let dir = std::env::temp_dir().join(format!("tlsuff-csv-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("create scratch directory");
    let spec = GenSpec::new(12, 2);
    let truth = gen_coefficients(&spec, &mut stream(1, 0, 0, Purpose::Coefficients))?;
    write_source_csv(
        &dir.join("source.csv"),
        &gen_source(20_000, &spec, &truth, &mut stream(1, 0, 0, Purpose::SourceData))?,
    )?;
    write_target_csv(
        &dir.join("target.csv"),
        &gen_target(150, &spec, &truth, &mut stream(1, 0, 0, Purpose::TargetData))?,
    )?;

    let opts = FitOptions::default();
    let mut source = read_source_csv(&dir.join("source.csv"), None)?;
    source.center_columns();
    let model = fit_multinomial_logistic(&source, &opts)?;
    write_model_csv(&dir.join("model.csv"), &model)?;

    let reloaded = read_model_csv(&dir.join("model.csv"))?;
    assert_eq!(reloaded.b, model.b, "17 significant digits round-trip exactly");
    let mut target = read_target_csv(&dir.join("target.csv"))?;
    target.center_columns();
    let result = test_sufficiency(&reloaded, &target, 0.05, &opts)?;
    println!("{}", serde_json::to_string_pretty(&result).expect("serializable"));
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}

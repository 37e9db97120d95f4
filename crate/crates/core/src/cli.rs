//! The `tlsuff` command line.
//!
//! ```text
//! tlsuff generate   --p 20 --classes 3 --source-n 20000 --target-n 300 --out data/
//! tlsuff fit-source data/source.csv --out model.csv
//! tlsuff test       data/target.csv --model model.csv --alpha 0.05 --out result.json
//! tlsuff simulate   size.cfg --out results/size --threads 4
//! ```
//!
//! Exit status: 0 on success (whatever the test decides), 2 for usage or
//! configuration errors, 3 for unreadable or invalid data, 4 when a
//! numerical routine fails.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::warn;
use serde_json::json;

use crate::error::{Error, Result};
use crate::glm::{fit_multinomial_logistic, FitOptions, Solver};
use crate::harness::{self, ExperimentConfig};
use crate::io::{
    read_model_csv, read_source_csv, read_target_csv, sidecar_path, write_json, write_matrix_csv,
    write_model_csv, write_source_csv, write_target_csv,
};
use crate::rng::{stream, Purpose};
use crate::simgen::{gen_coefficients, gen_source, gen_target, GenSpec};
use crate::suff_test::test_sufficiency;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tlsuff", version, about = "Transfer learning for logistic regression and its sufficiency test")]
pub struct Cli {
    /// Worker threads for simulations (0 = one per core).
    #[arg(long, global = true, env = "TLSUFF_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the multinomial source model and write its coefficient matrix.
    FitSource(FitSourceArgs),
    /// Test whether a source model's features suffice for a target sample.
    Test(TestArgs),
    /// Run a Monte Carlo experiment described by a config file.
    Simulate(SimulateArgs),
    /// Export simulated source and target samples as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SolverArg {
    Auto,
    ExactNewton,
    QuasiNewton,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Weight of an optional `ridge * |b|^2 / 2` penalty.
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
    /// Largest parameter count fitted by exact Newton under `--solver auto`.
    #[arg(long, default_value_t = 2000)]
    pub dense_hessian_cap: usize,
}

impl FitArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            grad_tol: self.grad_tol,
            rel_tol: self.rel_tol,
            max_iter: self.max_iter,
            ridge: self.ridge,
            solver: match self.solver {
                SolverArg::Auto => Solver::Auto,
                SolverArg::ExactNewton => Solver::ExactNewton,
                SolverArg::QuasiNewton => Solver::QuasiNewton,
            },
            dense_hessian_cap: self.dense_hessian_cap,
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct FitSourceArgs {
    /// Source CSV with header `y,x1,...,xp` and labels in 0..=K.
    pub source: PathBuf,
    /// Model CSV to write; diagnostics go to the same path with `.json`.
    #[arg(long, default_value = "model.csv")]
    pub out: PathBuf,
    /// Number of non-base classes; defaults to the largest label.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Subtract column means before fitting.
    #[arg(long)]
    pub center: bool,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct TestArgs {
    /// Target CSV with header `y,x1,...,xp` and labels in {0, 1}.
    pub target: PathBuf,
    /// Model CSV written by `fit-source`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = "sufficiency.json")]
    pub out: PathBuf,
    /// Subtract column means before testing.
    #[arg(long)]
    pub center: bool,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `key = value` experiment description.
    pub config: PathBuf,
    /// Output prefix; defaults to the experiment kind.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `alpha`.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Run the full-scale reference grid for the config's kind instead of
    /// its sizes. Expect hours to days of compute.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub p: usize,
    /// Non-base source classes.
    #[arg(long, default_value_t = 8)]
    pub classes: usize,
    #[arg(long)]
    pub source_n: usize,
    #[arg(long)]
    pub target_n: usize,
    /// Coefficient of `x1` in the target logit; 0 keeps the features sufficient.
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving `source.csv`, `target.csv` and `truth.csv`.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Maps an error to the documented exit status.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidOptions(_) | Error::DomainError { .. } => EXIT_USAGE,
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_DATA,
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Errors are reported on stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::FitSource(a) => fit_source(a),
        Command::Test(a) => test(a),
        Command::Simulate(a) => simulate(a, cli.threads),
        Command::Generate(a) => generate(a),
    }
}

fn fit_source(a: &FitSourceArgs) -> Result<()> {
    let mut data = read_source_csv(&a.source, a.classes)?;
    let means = a.center.then(|| data.center_columns());
    let opts = a.fit.options();
    let model = fit_multinomial_logistic(&data, &opts)?;
    write_model_csv(&a.out, &model)?;
    let sidecar = sidecar_path(&a.out);
    write_json(
        &sidecar,
        &json!({
            "schema_version": 1,
            "source": a.source.display().to_string(),
            "N": data.n(),
            "p": data.p(),
            "K": data.k(),
            "centered": a.center,
            "column_means": means.map(|m| m.to_vec()),
            "fit_options": opts,
            "diagnostics": model.diagnostics,
        }),
    )?;
    let diag = model.diagnostics.as_ref().expect("fitted model");
    println!(
        "fitted p = {}, K = {} on N = {} rows: {} iterations, log-likelihood {:.6}, gradient sup-norm {:.3e}",
        data.p(),
        data.k(),
        data.n(),
        diag.iterations,
        diag.final_loglik,
        diag.final_grad_norm
    );
    println!("wrote {} and {}", a.out.display(), sidecar.display());
    Ok(())
}

/// Source sample size recorded in a model's sidecar, if there is one.
fn sidecar_source_n(model: &Path) -> Option<usize> {
    let text = std::fs::read_to_string(sidecar_path(model)).ok()?;
    let doc: serde_json::Value = serde_json::from_str(&text).ok()?;
    doc.get("N")?.as_u64().map(|n| n as usize)
}

fn test(a: &TestArgs) -> Result<()> {
    let mut data = read_target_csv(&a.target)?;
    if a.center {
        data.center_columns();
    }
    let mut model = read_model_csv(&a.model)?;
    model.source_n = sidecar_source_n(&a.model);
    if model.source_n.is_none() {
        warn!("no sidecar with the source size next to {}; skipping the n^2 p / N check", a.model.display());
    }
    let result = test_sufficiency(&model, &data, a.alpha, &a.fit.options())?;
    write_json(&a.out, &result)?;
    println!(
        "T4 = {:.4}, p-value = {:.4}: {} transfer-learning sufficiency at alpha = {} (n = {}, p = {}, K = {}, centered: {})",
        result.t4,
        result.p_value,
        if result.reject { "reject" } else { "do not reject" },
        result.alpha,
        result.n,
        result.p,
        result.k,
        if a.center { "yes" } else { "no" }
    );
    Ok(())
}

fn simulate(a: &SimulateArgs, threads: Option<usize>) -> Result<()> {
    let mut cfg = ExperimentConfig::from_path(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.base_seed = seed;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if let Some(t) = threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    let prefix = a.out.clone().unwrap_or_else(|| PathBuf::from(cfg.kind.as_str()));
    let runs: Vec<(ExperimentConfig, PathBuf)> = if a.full {
        let grid = ExperimentConfig::paper_grid(cfg.kind);
        warn!(
            "--full runs {} full-scale configurations with {} replications each; expect hours to days",
            grid.len(),
            grid.first().map_or(0, |g| g.b_reps)
        );
        grid.into_iter()
            .map(|mut g| {
                g.base_seed = cfg.base_seed;
                g.experiment_id = cfg.experiment_id;
                g.alpha = cfg.alpha;
                g.threads = cfg.threads;
                g.t3_diagnostic = cfg.t3_diagnostic;
                g.t3_mc_samples = cfg.t3_mc_samples;
                let name = format!(
                    "{}-n{}-p{}-N{}",
                    prefix.file_name().map_or("run".into(), |n| n.to_string_lossy()),
                    g.n,
                    g.p,
                    g.big_n
                );
                (g, prefix.with_file_name(name))
            })
            .collect()
    } else {
        vec![(cfg, prefix)]
    };
    for (cfg, prefix) in runs {
        let started = std::time::Instant::now();
        let result = harness::run(&cfg)?;
        let paths = harness::write_outputs(&result, &prefix)?;
        println!(
            "{} (n = {}, p = {}, N = {}, K = {}, {} replications) finished in {:.1?}",
            cfg.kind,
            cfg.n,
            cfg.p,
            cfg.big_n,
            cfg.k,
            cfg.b_reps,
            started.elapsed()
        );
        match &result.aggregates {
            harness::Aggregates::Mse(list) => {
                for s in list {
                    println!("  {:<9} median log(MSE) {:.4}", s.estimator.as_str(), s.median_log_mse);
                }
            }
            harness::Aggregates::Size(list) => {
                for s in list {
                    println!(
                        "  {:<9} EJP {:.4}  mean {:.3}  variance {:.3}",
                        s.test, s.ejp, s.mean, s.variance
                    );
                }
            }
            harness::Aggregates::Power(list) => {
                for s in list {
                    println!("  delta {:<6} EJP {:.4}", s.delta, s.ejp);
                }
            }
        }
        println!(
            "  wrote {}, {}, {}",
            paths.records.display(),
            paths.summary.display(),
            paths.json.display()
        );
    }
    Ok(())
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let mut spec = GenSpec::new(a.p, a.classes);
    spec.rho = a.rho;
    spec.delta = a.delta;
    spec.base_seed = a.seed;
    spec.validate()?;
    let truth = gen_coefficients(&spec, &mut stream(a.seed, 0, 0, Purpose::Coefficients))?;
    let source = gen_source(a.source_n, &spec, &truth, &mut stream(a.seed, 0, 0, Purpose::SourceData))?;
    let target = gen_target(a.target_n, &spec, &truth, &mut stream(a.seed, 0, 0, Purpose::TargetData))?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let source_path = a.out.join("source.csv");
    let target_path = a.out.join("target.csv");
    let truth_path = a.out.join("truth.csv");
    write_source_csv(&source_path, &source)?;
    write_target_csv(&target_path, &target)?;
    write_matrix_csv(&truth_path, &truth.b)?;
    println!(
        "wrote {} ({} rows), {} ({} rows) and {}",
        source_path.display(),
        source.n(),
        target_path.display(),
        target.n(),
        truth_path.display()
    );
    Ok(())
}

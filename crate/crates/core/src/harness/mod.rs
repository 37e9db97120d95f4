//! Replicated Monte Carlo experiments: estimation error of the transferred
//! estimator, and size and power of the sufficiency test.
//!
//! Replication `b` draws its source and target samples from streams keyed by
//! `(base_seed, experiment_id, b)`, so records do not depend on the number
//! of workers or on scheduling. The true coefficients are drawn once per
//! `(base_seed, p, K)` and shared by every replication and experiment.

mod config;
mod output;

use std::sync::atomic::{AtomicUsize, Ordering};

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::glm::{fit_binary_logistic, fit_multinomial_logistic, SourceModel};
use crate::rng::{stream, Purpose};
use crate::simgen::{
    default_gamma, gen_coefficients, gen_source, gen_target, gen_target_family,
    population_traces, GenSpec, GroundTruth,
};
use crate::suff_test::{normal_quantile, statistic_t3, test_fitted};
use crate::transfer::{fit_transfer, mse, oracle_fit};

pub use config::{Estimator, ExperimentConfig, ExperimentKind};
pub use output::{read_records_csv, write_outputs, OutputPaths};

/// One replication (or one `(replication, delta)` cell for power runs).
#[derive(Debug, Clone, PartialEq)]
pub struct Row<T> {
    pub rep: usize,
    /// Signal strength; zero outside power runs.
    pub delta: f64,
    /// The measured values, or the message of the error that stopped them.
    pub outcome: std::result::Result<T, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseValues {
    /// One entry per estimator, in the order of [`Records::Mse::estimators`].
    pub mse: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestValues {
    pub t4: f64,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeValues {
    pub empirical: TestValues,
    /// The same test on features built from the true coefficients.
    pub oracle: TestValues,
    /// `T2` standardized by the simulated population trace, when requested.
    pub t3: Option<TestValues>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Records {
    Mse {
        estimators: Vec<Estimator>,
        rows: Vec<Row<MseValues>>,
    },
    Size(Vec<Row<SizeValues>>),
    Power(Vec<Row<TestValues>>),
}

/// Distribution of `log(MSE)` for one estimator.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    pub successes: usize,
    pub failures: usize,
    pub median_log_mse: f64,
    pub q1_log_mse: f64,
    pub q3_log_mse: f64,
    pub mean_log_mse: f64,
}

/// Rejection rate and null moments of one test statistic.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TestSummary {
    /// `empirical`, `oracle` or `t3`.
    pub test: String,
    pub successes: usize,
    pub failures: usize,
    pub ejp: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PowerPoint {
    pub delta: f64,
    pub successes: usize,
    pub failures: usize,
    pub ejp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aggregates {
    Mse(Vec<EstimatorSummary>),
    Size(Vec<TestSummary>),
    Power(Vec<PowerPoint>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub records: Records,
    pub aggregates: Aggregates,
    /// Monte Carlo `tr(Sigma_gamma^2)` used for `T3`, when computed.
    pub population_trace_sq: Option<f64>,
}

impl ExperimentResult {
    /// Rejection rate of the empirical test (size runs) or of the first
    /// grid point (power runs).
    pub fn ejp(&self) -> Option<f64> {
        match &self.aggregates {
            Aggregates::Mse(_) => None,
            Aggregates::Size(tests) => tests.first().map(|t| t.ejp),
            Aggregates::Power(points) => points.first().map(|p| p.ejp),
        }
    }
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Mse { rows, .. } => rows.len(),
            Records::Size(rows) => rows.len(),
            Records::Power(rows) => rows.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Error messages of the failed rows.
    pub fn failures(&self) -> Vec<&str> {
        fn errs<T>(rows: &[Row<T>]) -> Vec<&str> {
            rows.iter()
                .filter_map(|r| r.outcome.as_ref().err().map(String::as_str))
                .collect()
        }
        match self {
            Records::Mse { rows, .. } => errs(rows),
            Records::Size(rows) => errs(rows),
            Records::Power(rows) => errs(rows),
        }
    }

    /// Summaries over the successful rows. Depends on nothing but the
    /// records, so re-reading an emitted records file reproduces it.
    pub fn aggregate(&self) -> Aggregates {
        match self {
            Records::Mse { estimators, rows } => {
                let ok: Vec<&MseValues> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
                let failures = rows.len() - ok.len();
                let summaries = estimators
                    .iter()
                    .enumerate()
                    .map(|(i, &estimator)| {
                        let mut logs: Vec<f64> = ok.iter().map(|v| v.mse[i].ln()).collect();
                        logs.sort_by(f64::total_cmp);
                        EstimatorSummary {
                            estimator,
                            successes: logs.len(),
                            failures,
                            median_log_mse: quantile(&logs, 0.5),
                            q1_log_mse: quantile(&logs, 0.25),
                            q3_log_mse: quantile(&logs, 0.75),
                            mean_log_mse: mean(&logs),
                        }
                    })
                    .collect();
                Aggregates::Mse(summaries)
            }
            Records::Size(rows) => {
                let ok: Vec<&SizeValues> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
                let failures = rows.len() - ok.len();
                let mut tests = vec![
                    summarize("empirical", ok.iter().map(|v| v.empirical), failures),
                    summarize("oracle", ok.iter().map(|v| v.oracle), failures),
                ];
                if ok.iter().any(|v| v.t3.is_some()) {
                    tests.push(summarize("t3", ok.iter().filter_map(|v| v.t3), failures));
                }
                Aggregates::Size(tests)
            }
            Records::Power(rows) => {
                let mut deltas: Vec<f64> = Vec::new();
                for r in rows {
                    if !deltas.contains(&r.delta) {
                        deltas.push(r.delta);
                    }
                }
                let points = deltas
                    .into_iter()
                    .map(|delta| {
                        let cell: Vec<&Row<TestValues>> = rows.iter().filter(|r| r.delta == delta).collect();
                        let ok: Vec<TestValues> = cell.iter().filter_map(|r| r.outcome.clone().ok()).collect();
                        PowerPoint {
                            delta,
                            successes: ok.len(),
                            failures: cell.len() - ok.len(),
                            ejp: rejection_rate(&ok),
                        }
                    })
                    .collect();
                Aggregates::Power(points)
            }
        }
    }
}

fn summarize(name: &str, values: impl Iterator<Item = TestValues>, failures: usize) -> TestSummary {
    let values: Vec<TestValues> = values.collect();
    let stats: Vec<f64> = values.iter().map(|v| v.t4).collect();
    TestSummary {
        test: name.to_string(),
        successes: values.len(),
        failures,
        ejp: rejection_rate(&values),
        mean: mean(&stats),
        variance: variance(&stats),
    }
}

fn rejection_rate(values: &[TestValues]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().filter(|v| v.reject).count() as f64 / values.len() as f64
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance; NaN below two values.
fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = (len - 1) as f64 * q;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

fn gen_spec(cfg: &ExperimentConfig) -> GenSpec {
    GenSpec {
        p: cfg.p,
        k: cfg.k,
        rho: cfg.rho,
        gamma: cfg
            .gamma
            .as_ref()
            .map(|g| g.iter().copied().collect())
            .unwrap_or_else(|| default_gamma(cfg.k)),
        delta: 0.0,
        base_seed: cfg.base_seed,
    }
}

/// The coefficients every replication of a `(base_seed, p, K)` setting shares.
pub fn ground_truth(cfg: &ExperimentConfig) -> Result<GroundTruth> {
    gen_coefficients(&gen_spec(cfg), &mut stream(cfg.base_seed, 0, 0, Purpose::Coefficients))
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    spec: GenSpec,
    truth: GroundTruth,
    critical: f64,
    population_trace_sq: Option<f64>,
}

impl Context<'_> {
    fn fit_source(&self, b: usize) -> Result<SourceModel> {
        let mut rng = stream(self.cfg.base_seed, self.cfg.experiment_id, b as u64, Purpose::SourceData);
        let source = gen_source(self.cfg.big_n, &self.spec, &self.truth, &mut rng)?;
        fit_multinomial_logistic(&source, &self.cfg.fit)
    }

    fn target_rng(&self, b: usize) -> crate::rng::StreamRng {
        stream(self.cfg.base_seed, self.cfg.experiment_id, b as u64, Purpose::TargetData)
    }

    fn mse_rep(&self, b: usize, estimators: &[Estimator]) -> Result<MseValues> {
        let source = if estimators.contains(&Estimator::Transfer) {
            Some(self.fit_source(b)?)
        } else {
            None
        };
        let target = gen_target(self.cfg.n, &self.spec, &self.truth, &mut self.target_rng(b))?;
        let truth = self.truth.theta.view();
        let mse = estimators
            .iter()
            .map(|est| {
                let theta = match est {
                    Estimator::Mle => fit_binary_logistic(&target, &self.cfg.fit)?.0,
                    Estimator::Transfer => {
                        fit_transfer(source.as_ref().expect("fitted above"), &target, &self.cfg.fit)?.theta
                    }
                    Estimator::Oracle => oracle_fit(self.truth.b.view(), &target, &self.cfg.fit)?.theta,
                };
                mse(theta.view(), truth)
            })
            .collect::<Result<_>>()?;
        Ok(MseValues { mse })
    }

    fn test_values(&self, t4: f64, p_value: f64) -> TestValues {
        TestValues {
            t4,
            p_value,
            reject: t4 > self.critical,
        }
    }

    fn size_rep(&self, b: usize) -> Result<SizeValues> {
        let source = self.fit_source(b)?;
        let target = gen_target(self.cfg.n, &self.spec, &self.truth, &mut self.target_rng(b))?;
        let alpha = self.cfg.alpha;
        let fit = fit_transfer(&source, &target, &self.cfg.fit)?;
        let empirical = test_fitted(&fit, &target, alpha)?;
        let oracle = test_fitted(&oracle_fit(self.truth.b.view(), &target, &self.cfg.fit)?, &target, alpha)?;
        let t3 = match self.population_trace_sq {
            Some(trace_sq) => {
                let t3 = statistic_t3(empirical.t2, trace_sq, target.n())?;
                Some(self.test_values(t3, crate::suff_test::normal_sf(t3)))
            }
            None => None,
        };
        Ok(SizeValues {
            empirical: self.test_values(empirical.t4, empirical.p_value),
            oracle: self.test_values(oracle.t4, oracle.p_value),
            t3,
        })
    }

    fn power_rep(&self, b: usize) -> Vec<Row<TestValues>> {
        let grid = &self.cfg.delta_grid;
        let cells = (|| -> Result<Vec<Result<TestValues>>> {
            let source = self.fit_source(b)?;
            let family = gen_target_family(self.cfg.n, &self.spec, &self.truth, grid, &mut self.target_rng(b))?;
            Ok(family
                .iter()
                .map(|target| {
                    let fit = fit_transfer(&source, target, &self.cfg.fit)?;
                    let r = test_fitted(&fit, target, self.cfg.alpha)?;
                    Ok(self.test_values(r.t4, r.p_value))
                })
                .collect())
        })();
        match cells {
            Ok(cells) => grid
                .iter()
                .zip(cells)
                .map(|(&delta, outcome)| Row {
                    rep: b,
                    delta,
                    outcome: outcome.map_err(|e| e.to_string()),
                })
                .collect(),
            Err(e) => grid
                .iter()
                .map(|&delta| Row {
                    rep: b,
                    delta,
                    outcome: Err(e.to_string()),
                })
                .collect(),
        }
    }
}

fn row<T>(rep: usize, outcome: Result<T>) -> Row<T> {
    Row {
        rep,
        delta: 0.0,
        outcome: outcome.map_err(|e| e.to_string()),
    }
}

/// Runs `f` for every replication on a pool of `threads` workers (0 = one
/// per core) and returns the results in replication order.
fn replicate<T: Send>(cfg: &ExperimentConfig, f: impl Fn(usize) -> T + Sync) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::config("threads", e.to_string()))?;
    let done = AtomicUsize::new(0);
    let total = cfg.b_reps;
    let step = (total / 10).max(1);
    Ok(pool.install(|| {
        (0..total)
            .into_par_iter()
            .map(|b| {
                let out = f(b);
                let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
                if finished % step == 0 || finished == total {
                    info!("{} experiment: {finished}/{total} replications", cfg.kind);
                }
                out
            })
            .collect()
    }))
}

/// Runs the experiment `cfg` describes.
///
/// Replications whose fits fail are kept in the records with their error
/// and left out of the aggregates; more than 10% failures is an error.
pub fn run(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let truth = ground_truth(cfg)?;
    let spec = gen_spec(cfg);
    if cfg.kind != ExperimentKind::Mse {
        let ratio = (cfg.n * cfg.n) as f64 * cfg.p as f64 / cfg.big_n as f64;
        if ratio > 1.0 {
            warn!("n^2 p / N = {ratio:.3} exceeds 1; the normal reference for T4 may be unreliable");
        }
    }
    let population_trace_sq = if cfg.kind == ExperimentKind::Size && cfg.t3_diagnostic {
        let mut rng = stream(cfg.base_seed, cfg.experiment_id, 0, Purpose::Diagnostic);
        Some(population_traces(&spec, &truth, cfg.t3_mc_samples, &mut rng)?.1)
    } else {
        None
    };
    let ctx = Context {
        cfg,
        spec,
        truth,
        critical: normal_quantile(1.0 - cfg.alpha)?,
        population_trace_sq,
    };
    let records = match cfg.kind {
        ExperimentKind::Mse => {
            let estimators = cfg.estimator_set();
            let rows = replicate(cfg, |b| row(b, ctx.mse_rep(b, &estimators)))?;
            Records::Mse { estimators, rows }
        }
        ExperimentKind::Size => Records::Size(replicate(cfg, |b| row(b, ctx.size_rep(b)))?),
        ExperimentKind::Power => {
            Records::Power(replicate(cfg, |b| ctx.power_rep(b))?.into_iter().flatten().collect())
        }
    };
    let failures = records.failures();
    if failures.len() * 10 > records.len() {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: records.len(),
            last: failures.last().copied().unwrap_or_default().to_string(),
        });
    }
    if !failures.is_empty() {
        warn!(
            "{} of {} replications failed and are excluded; first failure: {}",
            failures.len(),
            records.len(),
            failures[0]
        );
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        aggregates: records.aggregate(),
        records,
        population_trace_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
        assert!(quantile(&[], 0.5).is_nan());
    }

    #[test]
    fn failed_rows_leave_the_denominator() {
        let ok = |t4: f64| TestValues {
            t4,
            p_value: 0.5,
            reject: t4 > 1.0,
        };
        let rows = vec![
            Row { rep: 0, delta: 1.0, outcome: Ok(ok(2.0)) },
            Row { rep: 0, delta: 2.0, outcome: Ok(ok(0.0)) },
            Row { rep: 1, delta: 1.0, outcome: Err("boom".into()) },
            Row { rep: 1, delta: 2.0, outcome: Ok(ok(3.0)) },
        ];
        let Aggregates::Power(points) = Records::Power(rows).aggregate() else {
            unreachable!()
        };
        assert_eq!(points.len(), 2);
        assert_eq!((points[0].successes, points[0].failures, points[0].ejp), (1, 1, 1.0));
        assert_eq!((points[1].successes, points[1].failures, points[1].ejp), (2, 0, 0.5));
    }

    #[test]
    fn small_mse_run() {
        let mut cfg = ExperimentConfig::desk(ExperimentKind::Mse);
        cfg.n = 60;
        cfg.p = 5;
        cfg.big_n = 2000;
        cfg.k = 2;
        cfg.b_reps = 3;
        cfg.threads = 1;
        let result = run(&cfg).unwrap();
        let Aggregates::Mse(summaries) = &result.aggregates else {
            unreachable!()
        };
        assert_eq!(summaries.len(), 3);
        assert!(summaries.iter().all(|s| s.successes == 3 && s.median_log_mse.is_finite()));
        assert_eq!(result.ejp(), None);
    }
}

//! Flat `key = value` experiment configuration.
//!
//! ```text
//! # empirical size at desk scale
//! kind = size
//! n = 200
//! p = 400
//! N = 100000
//! B_reps = 500
//! delta_grid = 1, 3, 5
//! ```
//!
//! `kind` selects the defaults; every other key overrides one field. Keys
//! are case-sensitive (`n` is the target size, `N` the source size), lists
//! are comma-separated and `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{FitOptions, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Mse,
    Size,
    Power,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Mse => "mse",
            ExperimentKind::Size => "size",
            ExperimentKind::Power => "power",
        }
    }

    /// Default stream family, so experiments of different kinds never share
    /// random numbers unless asked to.
    pub fn default_experiment_id(self) -> u64 {
        match self {
            ExperimentKind::Mse => 1,
            ExperimentKind::Size => 2,
            ExperimentKind::Power => 3,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(ExperimentKind::Mse),
            "size" => Ok(ExperimentKind::Size),
            "power" => Ok(ExperimentKind::Power),
            _ => Err(Error::config("kind", format!("expected mse, size or power, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Target-only maximum likelihood on all `p` covariates.
    Mle,
    Transfer,
    Oracle,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Mle, Estimator::Transfer, Estimator::Oracle];

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Mle => "mle",
            Estimator::Transfer => "transfer",
            Estimator::Oracle => "oracle",
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mle" => Ok(Estimator::Mle),
            "transfer" => Ok(Estimator::Transfer),
            "oracle" => Ok(Estimator::Oracle),
            _ => Err(Error::config(
                "estimators",
                format!("expected mle, transfer or oracle, got `{s}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Target sample size.
    pub n: usize,
    pub p: usize,
    /// Source sample size.
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "B_reps")]
    pub b_reps: usize,
    pub alpha: f64,
    /// Signal strengths for `power`; ignored otherwise.
    pub delta_grid: Vec<f64>,
    /// Estimators compared by `mse`; ignored otherwise.
    pub estimators: Vec<Estimator>,
    pub base_seed: u64,
    pub experiment_id: u64,
    pub rho: f64,
    /// Target coefficients on the features; `None` uses the default for `K`.
    pub gamma: Option<Vec<f64>>,
    pub fit: FitOptions,
    /// Also standardize `T2` by a Monte Carlo estimate of the population
    /// trace (size experiments only).
    pub t3_diagnostic: bool,
    pub t3_mc_samples: usize,
    /// Worker threads; 0 means one per available core. Left out of
    /// serialized output, which must not depend on it.
    #[serde(skip)]
    pub threads: usize,
}

impl ExperimentConfig {
    /// Defaults for `kind`, sized to finish on a single workstation.
    pub fn desk(kind: ExperimentKind) -> Self {
        let mut cfg = Self {
            kind,
            n: 200,
            p: 400,
            big_n: 100_000,
            k: 4,
            b_reps: 500,
            alpha: 0.05,
            delta_grid: Vec::new(),
            estimators: Vec::new(),
            base_seed: 20_240_601,
            experiment_id: kind.default_experiment_id(),
            rho: 0.5,
            gamma: None,
            fit: FitOptions::default(),
            t3_diagnostic: false,
            t3_mc_samples: 20_000,
            threads: 0,
        };
        match kind {
            ExperimentKind::Mse => {
                cfg.n = 400;
                cfg.p = 40;
                cfg.big_n = 40_000;
                cfg.b_reps = 200;
                cfg.estimators = Estimator::ALL.to_vec();
            }
            ExperimentKind::Size => {}
            ExperimentKind::Power => {
                cfg.n = 500;
                cfg.b_reps = 300;
                cfg.delta_grid = vec![1.0, 3.0, 5.0];
            }
        }
        if kind != ExperimentKind::Mse {
            // p * K = 1600 source parameters: a dense Hessian over 1e5 rows
            // costs far more than the quasi-Newton iterations it saves.
            cfg.fit.dense_hessian_cap = 1000;
        }
        cfg
    }

    /// Full-scale grids of the reference study (`K = 8`, 1000 replications).
    /// These take hours to days on a workstation.
    pub fn paper_grid(kind: ExperimentKind) -> Vec<Self> {
        let base = |n: usize, p: usize, big_n: usize| {
            let mut cfg = Self::desk(kind);
            cfg.n = n;
            cfg.p = p;
            cfg.big_n = big_n;
            cfg.k = 8;
            cfg.b_reps = 1000;
            cfg.fit.dense_hessian_cap = FitOptions::default().dense_hessian_cap;
            cfg
        };
        let mut grid = Vec::new();
        match kind {
            ExperimentKind::Mse => {
                // p < n: all three estimators, one factor varied at a time.
                for p in [40, 80, 120] {
                    grid.push(base(600, p, 40_000));
                }
                for n in [400, 800] {
                    grid.push(base(n, 80, 40_000));
                }
                for big_n in [20_000, 80_000] {
                    grid.push(base(600, 80, big_n));
                }
                // n <= p: the target-only MLE does not exist.
                let mut high = Vec::new();
                for p in [100, 200, 300] {
                    high.push(base(100, p, 40_000));
                }
                for n in [75, 150] {
                    high.push(base(n, 300, 40_000));
                }
                for big_n in [20_000, 80_000] {
                    high.push(base(100, 300, big_n));
                }
                for cfg in &mut high {
                    cfg.estimators = vec![Estimator::Transfer, Estimator::Oracle];
                }
                grid.extend(high);
            }
            ExperimentKind::Size => {
                for n in [200, 300, 500] {
                    for big_n in [400_000, 600_000, 800_000] {
                        for p in [1000, 1500, 2000, 3000] {
                            grid.push(base(n, p, big_n));
                        }
                    }
                }
            }
            ExperimentKind::Power => {
                for n in [200, 300, 500] {
                    let mut cfg = base(n, 2000, 400_000);
                    cfg.delta_grid = vec![1.0, 2.0, 3.0, 4.0, 5.0];
                    grid.push(cfg);
                }
            }
        }
        grid
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            let key = key.trim().to_string();
            if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Error::config(key, "given more than once"));
            }
        }
        let kind: ExperimentKind = pairs
            .remove("kind")
            .ok_or_else(|| Error::config("kind", "missing; expected mse, size or power"))?
            .parse()?;
        let mut cfg = Self::desk(kind);
        for (key, value) in &pairs {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Overrides one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = value.parse()?,
            "n" => self.n = scalar(key, value)?,
            "p" => self.p = scalar(key, value)?,
            "N" => self.big_n = scalar(key, value)?,
            "K" => self.k = scalar(key, value)?,
            "B_reps" => self.b_reps = scalar(key, value)?,
            "alpha" => self.alpha = scalar(key, value)?,
            "delta_grid" => self.delta_grid = list(key, value)?,
            "estimators" => {
                self.estimators = split(value).map(str::parse).collect::<Result<_>>()?;
            }
            "base_seed" => self.base_seed = scalar(key, value)?,
            "experiment_id" => self.experiment_id = scalar(key, value)?,
            "rho" => self.rho = scalar(key, value)?,
            "gamma" => self.gamma = Some(list(key, value)?),
            "grad_tol" => self.fit.grad_tol = scalar(key, value)?,
            "rel_tol" => self.fit.rel_tol = scalar(key, value)?,
            "max_iter" => self.fit.max_iter = scalar(key, value)?,
            "ridge" => self.fit.ridge = scalar(key, value)?,
            "solver" => {
                self.fit.solver = match value {
                    "auto" => Solver::Auto,
                    "exact-newton" => Solver::ExactNewton,
                    "quasi-newton" => Solver::QuasiNewton,
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("expected auto, exact-newton or quasi-newton, got `{value}`"),
                        ))
                    }
                }
            }
            "dense_hessian_cap" => self.fit.dense_hessian_cap = scalar(key, value)?,
            "lbfgs_history" => self.fit.lbfgs_history = scalar(key, value)?,
            "t3_diagnostic" => self.t3_diagnostic = scalar(key, value)?,
            "t3_mc_samples" => self.t3_mc_samples = scalar(key, value)?,
            "threads" => self.threads = scalar(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(field, msg));
        if self.b_reps < 1 {
            return bad("B_reps", "must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha", format!("must lie in (0, 1), got {}", self.alpha));
        }
        if self.p < 1 {
            return bad("p", "must be at least 1".into());
        }
        if self.k < 1 {
            return bad("K", "must be at least 1".into());
        }
        if self.n < 2 || self.n <= self.k {
            return bad("n", format!("must exceed K = {} and be at least 2, got {}", self.k, self.n));
        }
        if self.big_n < self.k + 1 {
            return bad("N", format!("must be at least K + 1 = {}, got {}", self.k + 1, self.big_n));
        }
        if !(self.rho.abs() < 1.0) {
            return bad("rho", format!("|rho| must be < 1, got {}", self.rho));
        }
        if let Some(g) = &self.gamma {
            if g.len() != self.k {
                return bad("gamma", format!("needs K = {} entries, got {}", self.k, g.len()));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return bad("gamma", "entries must be finite".into());
            }
        }
        match self.kind {
            ExperimentKind::Power => {
                if self.delta_grid.is_empty() {
                    return bad("delta_grid", "must list at least one value for kind = power".into());
                }
                if let Some(d) = self.delta_grid.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
                    return bad("delta_grid", format!("values must be positive, got {d}"));
                }
            }
            ExperimentKind::Mse => {
                if self.estimators.is_empty() {
                    return bad("estimators", "must list at least one of mle, transfer, oracle".into());
                }
                if self.estimators.contains(&Estimator::Mle) && self.p >= self.n {
                    return bad(
                        "estimators",
                        format!(
                            "mle requires p < n (got p = {}, n = {}); the target-only MLE does not exist otherwise",
                            self.p, self.n
                        ),
                    );
                }
            }
            ExperimentKind::Size => {
                if self.t3_diagnostic && self.t3_mc_samples < 2 {
                    return bad("t3_mc_samples", "must be at least 2".into());
                }
            }
        }
        self.fit
            .validate()
            .map_err(|e| Error::config("fit options", e.to_string()))
    }

    /// The estimator list without duplicates, in canonical order.
    pub fn estimator_set(&self) -> Vec<Estimator> {
        let mut set = self.estimators.clone();
        set.sort();
        set.dedup();
        set
    }
}

fn split(value: &str) -> impl Iterator<Item = &str> {
    value
        .trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

fn list(key: &str, value: &str) -> Result<Vec<f64>> {
    split(value).map(|v| scalar(key, v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_overrides_and_comments() {
        let cfg = ExperimentConfig::parse(
            "# power run\nkind = power\nn = 200 # smaller\nN=5000\ndelta_grid = [1, 2.5]\nsolver = quasi-newton\n",
        )
        .unwrap();
        assert_eq!(cfg.kind, ExperimentKind::Power);
        assert_eq!(cfg.n, 200);
        assert_eq!(cfg.big_n, 5000);
        assert_eq!(cfg.p, 400);
        assert_eq!(cfg.delta_grid, vec![1.0, 2.5]);
        assert_eq!(cfg.fit.solver, Solver::QuasiNewton);
    }

    #[test]
    fn errors_name_the_field() {
        let field = |text: &str| match ExperimentConfig::parse(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(field("n = 3"), "kind");
        assert_eq!(field("kind = size\nbogus = 1"), "bogus");
        assert_eq!(field("kind = size\nB_reps = 0"), "B_reps");
        assert_eq!(field("kind = size\nalpha = 1.5"), "alpha");
        assert_eq!(field("kind = power\ndelta_grid ="), "delta_grid");
        assert_eq!(field("kind = power\ndelta_grid = 1, -2"), "delta_grid");
        assert_eq!(field("kind = mse\np = 500\nn = 400"), "estimators");
        assert_eq!(field("kind = size\nn = 5\nn = 6"), "n");
        assert_eq!(field("kind = size\ngamma = 1, 2"), "gamma");
    }

    #[test]
    fn mle_only_needs_p_below_n() {
        let cfg = ExperimentConfig::parse("kind = mse\np = 500\nn = 400\nestimators = transfer, oracle")
            .unwrap();
        assert_eq!(cfg.estimator_set(), vec![Estimator::Transfer, Estimator::Oracle]);
    }

    #[test]
    fn paper_grids_validate() {
        for kind in [ExperimentKind::Mse, ExperimentKind::Size, ExperimentKind::Power] {
            let grid = ExperimentConfig::paper_grid(kind);
            assert!(!grid.is_empty());
            for cfg in grid {
                cfg.validate().unwrap();
                assert_eq!(cfg.k, 8);
                assert_eq!(cfg.b_reps, 1000);
            }
        }
        assert_eq!(ExperimentConfig::paper_grid(ExperimentKind::Size).len(), 36);
    }
}

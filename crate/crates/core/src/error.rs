use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{what} contains a non-finite value")]
    NonFinite { what: &'static str },

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("labels must contain both 0 and 1")]
    DegenerateLabels,

    #[error("class {class} never appears in the source labels")]
    MissingClass { class: usize },

    #[error("label {label} at row {row} is outside 0..={max}")]
    LabelOutOfRange { row: usize, label: usize, max: usize },

    #[error(
        "fit diverged after {iterations} iterations (coefficient norm {norm:.3e}); \
         the data look (quasi-)completely separated"
    )]
    SeparationDiverged { iterations: usize, norm: f64 },

    #[error("no convergence within {iterations} iterations (gradient sup-norm {grad_norm:.3e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("invalid fit options: {0}")]
    InvalidOptions(String),

    #[error("gram matrix needs n = {n} rows but the cap is {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },

    #[error("variance estimate {value:e} is not positive; the standardized statistic is undefined")]
    DegenerateVariance { value: f64 },

    #[error("argument {value} outside the open interval (0, 1)")]
    DomainError { value: f64 },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{}: {message}", location(.path, *.line, *.column))]
    Schema {
        path: Option<PathBuf>,
        line: Option<u64>,
        column: Option<usize>,
        message: String,
    },

    #[error("{failed} of {total} replications failed (more than 10%); last failure: {last}")]
    TooManyFailures {
        failed: usize,
        total: usize,
        last: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn location(path: &Option<PathBuf>, line: Option<u64>, column: Option<usize>) -> String {
    let mut out = match path {
        Some(p) => p.display().to_string(),
        None => "input".to_string(),
    };
    if let Some(l) = line {
        out.push_str(&format!(" line {l}"));
    }
    if let Some(c) = column {
        out.push_str(&format!(" column {c}"));
    }
    out
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures raised by a numerical routine rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SeparationDiverged { .. }
                | Error::NotConverged { .. }
                | Error::DegenerateVariance { .. }
                | Error::TooManyFailures { .. }
        )
    }
}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        });
    }
    Ok(())
}

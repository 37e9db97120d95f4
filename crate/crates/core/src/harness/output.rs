//! Result files: `<prefix>.records.csv` (one row per replication, or per
//! replication and `delta`), `<prefix>.summary.csv` (the aggregates) and
//! `<prefix>.json` (configuration plus aggregates).

use std::path::{Path, PathBuf};

use serde_json::json;

use super::{
    Aggregates, Estimator, ExperimentKind, ExperimentResult, MseValues, Records, Row,
    SizeValues, TestValues,
};
use crate::error::{Error, Result};
use crate::io::{atomic_write, format_f64, write_json};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputPaths {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub json: PathBuf,
}

impl OutputPaths {
    pub fn for_prefix(prefix: &Path) -> Self {
        let name = prefix
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "experiment".into());
        Self {
            records: prefix.with_file_name(format!("{name}.records.csv")),
            summary: prefix.with_file_name(format!("{name}.summary.csv")),
            json: prefix.with_file_name(format!("{name}.json")),
        }
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn test_fields(v: &TestValues) -> [String; 3] {
    [format_f64(v.t4), format_f64(v.p_value), flag(v.reject).into()]
}

fn to_csv(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::InvalidData(e.to_string());
    w.write_record(&header).map_err(wrap)?;
    for r in rows {
        w.write_record(&r).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| Error::InvalidData(e.to_string()))
}

fn outcome_fields<T>(row: &Row<T>, width: usize, fill: impl Fn(&T) -> Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(width + 2);
    match &row.outcome {
        Ok(v) => {
            out.push(String::new());
            out.extend(fill(v));
        }
        Err(e) => {
            out.push(e.clone());
            out.extend(std::iter::repeat_n(String::new(), width));
        }
    }
    out
}

fn records_csv(records: &Records) -> Result<Vec<u8>> {
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match records {
        Records::Mse { estimators, rows } => {
            let mut header = strs(&["rep", "error"]);
            header.extend(estimators.iter().map(|e| format!("mse_{}", e.as_str())));
            let body = rows
                .iter()
                .map(|r| {
                    let mut line = vec![r.rep.to_string()];
                    line.extend(outcome_fields(r, estimators.len(), |v: &MseValues| {
                        v.mse.iter().map(|m| format_f64(*m)).collect()
                    }));
                    line
                })
                .collect();
            to_csv(header, body)
        }
        Records::Size(rows) => {
            let with_t3 = rows.iter().any(|r| matches!(&r.outcome, Ok(v) if v.t3.is_some()));
            let mut header = strs(&[
                "rep",
                "error",
                "t4",
                "p_value",
                "reject",
                "oracle_t4",
                "oracle_p_value",
                "oracle_reject",
            ]);
            if with_t3 {
                header.extend(strs(&["t3", "t3_p_value", "t3_reject"]));
            }
            let width = header.len() - 2;
            let body = rows
                .iter()
                .map(|r| {
                    let mut line = vec![r.rep.to_string()];
                    line.extend(outcome_fields(r, width, |v: &SizeValues| {
                        let mut f: Vec<String> = test_fields(&v.empirical).into();
                        f.extend(test_fields(&v.oracle));
                        if with_t3 {
                            match &v.t3 {
                                Some(t3) => f.extend(test_fields(t3)),
                                None => f.extend(std::iter::repeat_n(String::new(), 3)),
                            }
                        }
                        f
                    }));
                    line
                })
                .collect();
            to_csv(header, body)
        }
        Records::Power(rows) => {
            let header = strs(&["rep", "delta", "error", "t4", "p_value", "reject"]);
            let body = rows
                .iter()
                .map(|r| {
                    let mut line = vec![r.rep.to_string(), format_f64(r.delta)];
                    line.extend(outcome_fields(r, 3, |v| test_fields(v).into()));
                    line
                })
                .collect();
            to_csv(header, body)
        }
    }
}

fn summary_csv(aggregates: &Aggregates) -> Result<Vec<u8>> {
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match aggregates {
        Aggregates::Mse(list) => to_csv(
            strs(&[
                "estimator",
                "successes",
                "failures",
                "median_log_mse",
                "q1_log_mse",
                "q3_log_mse",
                "mean_log_mse",
            ]),
            list.iter()
                .map(|s| {
                    vec![
                        s.estimator.as_str().to_string(),
                        s.successes.to_string(),
                        s.failures.to_string(),
                        format_f64(s.median_log_mse),
                        format_f64(s.q1_log_mse),
                        format_f64(s.q3_log_mse),
                        format_f64(s.mean_log_mse),
                    ]
                })
                .collect(),
        ),
        Aggregates::Size(list) => to_csv(
            strs(&["test", "successes", "failures", "ejp", "t4_mean", "t4_variance"]),
            list.iter()
                .map(|s| {
                    vec![
                        s.test.clone(),
                        s.successes.to_string(),
                        s.failures.to_string(),
                        format_f64(s.ejp),
                        format_f64(s.mean),
                        format_f64(s.variance),
                    ]
                })
                .collect(),
        ),
        Aggregates::Power(list) => to_csv(
            strs(&["delta", "successes", "failures", "ejp"]),
            list.iter()
                .map(|s| {
                    vec![
                        format_f64(s.delta),
                        s.successes.to_string(),
                        s.failures.to_string(),
                        format_f64(s.ejp),
                    ]
                })
                .collect(),
        ),
    }
}

fn summary_json(result: &ExperimentResult, paths: &OutputPaths) -> Result<serde_json::Value> {
    let file = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned());
    let summary = match &result.aggregates {
        Aggregates::Mse(list) => serde_json::to_value(list)?,
        Aggregates::Size(list) => serde_json::to_value(list)?,
        Aggregates::Power(list) => serde_json::to_value(list)?,
    };
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "kind": result.config.kind,
        "config": result.config,
        "rows": result.records.len(),
        "failures": result.records.failures().len(),
        "summary": summary,
        "files": {
            "records": file(&paths.records),
            "summary": file(&paths.summary),
        },
    });
    match &result.aggregates {
        Aggregates::Size(_) => doc["ejp"] = json!(result.ejp()),
        Aggregates::Power(points) => {
            doc["ejp"] = points
                .iter()
                .map(|p| json!({ "delta": p.delta, "ejp": p.ejp }))
                .collect();
        }
        Aggregates::Mse(_) => {}
    }
    if let Some(t) = result.population_trace_sq {
        doc["population_trace_sigma_sq"] = json!(t);
    }
    Ok(doc)
}

/// Writes the three result files next to `prefix`, each atomically.
pub fn write_outputs(result: &ExperimentResult, prefix: &Path) -> Result<OutputPaths> {
    let paths = OutputPaths::for_prefix(prefix);
    if let Some(dir) = paths.records.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    atomic_write(&paths.records, &records_csv(&result.records)?)?;
    atomic_write(&paths.summary, &summary_csv(&result.aggregates)?)?;
    write_json(&paths.json, &summary_json(result, &paths)?)?;
    Ok(paths)
}

fn parse_err(path: &Path, line: Option<u64>, message: String) -> Error {
    Error::Schema {
        path: Some(path.to_path_buf()),
        line,
        column: None,
        message,
    }
}

/// Reads a records file written by [`write_outputs`] back into memory.
pub fn read_records_csv(path: &Path, kind: ExperimentKind) -> Result<Records> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| parse_err(path, None, e.to_string()))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(path, Some(1), e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut raw = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(path, e.position().map(|p| p.line()), e.to_string()))?;
        raw.push((rec.position().map(|p| p.line()), rec));
    }
    let num = |line: Option<u64>, s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| parse_err(path, line, format!("`{s}` is not a number")))
    };
    let int = |line: Option<u64>, s: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| parse_err(path, line, format!("`{s}` is not an integer")))
    };
    let test = |line: Option<u64>, f: &[&str]| -> Result<TestValues> {
        Ok(TestValues {
            t4: num(line, f[0])?,
            p_value: num(line, f[1])?,
            reject: f[2] == "1",
        })
    };
    match kind {
        ExperimentKind::Mse => {
            let estimators = header
                .iter()
                .skip(2)
                .map(|h| {
                    h.strip_prefix("mse_")
                        .ok_or_else(|| parse_err(path, Some(1), format!("unexpected column `{h}`")))?
                        .parse::<Estimator>()
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = raw
                .iter()
                .map(|(line, rec)| {
                    let f: Vec<&str> = rec.iter().collect();
                    let outcome = if f[1].is_empty() {
                        Ok(MseValues {
                            mse: f[2..].iter().map(|s| num(*line, s)).collect::<Result<_>>()?,
                        })
                    } else {
                        Err(f[1].to_string())
                    };
                    Ok(Row {
                        rep: int(*line, f[0])?,
                        delta: 0.0,
                        outcome,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(Records::Mse { estimators, rows })
        }
        ExperimentKind::Size => {
            let with_t3 = header.len() > 8;
            let rows = raw
                .iter()
                .map(|(line, rec)| {
                    let f: Vec<&str> = rec.iter().collect();
                    let outcome = if f[1].is_empty() {
                        Ok(SizeValues {
                            empirical: test(*line, &f[2..5])?,
                            oracle: test(*line, &f[5..8])?,
                            t3: if with_t3 && !f[8].is_empty() {
                                Some(test(*line, &f[8..11])?)
                            } else {
                                None
                            },
                        })
                    } else {
                        Err(f[1].to_string())
                    };
                    Ok(Row {
                        rep: int(*line, f[0])?,
                        delta: 0.0,
                        outcome,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(Records::Size(rows))
        }
        ExperimentKind::Power => {
            let rows = raw
                .iter()
                .map(|(line, rec)| {
                    let f: Vec<&str> = rec.iter().collect();
                    let outcome = if f[2].is_empty() {
                        Ok(test(*line, &f[3..6])?)
                    } else {
                        Err(f[2].to_string())
                    };
                    Ok(Row {
                        rep: int(*line, f[0])?,
                        delta: num(*line, f[1])?,
                        outcome,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(Records::Power(rows))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_naming() {
        let p = OutputPaths::for_prefix(Path::new("out/size"));
        assert_eq!(p.records, Path::new("out/size.records.csv"));
        assert_eq!(p.summary, Path::new("out/size.summary.csv"));
        assert_eq!(p.json, Path::new("out/size.json"));
    }

    #[test]
    fn power_records_round_trip() {
        let rows = vec![
            Row {
                rep: 0,
                delta: 1.5,
                outcome: Ok(TestValues {
                    t4: 0.1 + 0.2,
                    p_value: 1.0 / 3.0,
                    reject: false,
                }),
            },
            Row {
                rep: 1,
                delta: 1.5,
                outcome: Err("fit diverged, badly".into()),
            },
        ];
        let records = Records::Power(rows);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        atomic_write(&path, &records_csv(&records).unwrap()).unwrap();
        assert_eq!(read_records_csv(&path, ExperimentKind::Power).unwrap(), records);
    }
}

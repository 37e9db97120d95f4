//! CSV and JSON file formats.
//!
//! Datasets are `y,x1,...,xp` with a mandatory header; models are `p` rows
//! under a `beta_1,...,beta_K` header. Reals are written with 17
//! significant digits so a write/read cycle is lossless. Every file is
//! written to a temporary sibling first and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::glm::{SourceDataset, SourceModel, TargetDataset};

/// Scientific notation with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `bytes` to a temporary file beside `path`, syncs it, then renames
/// it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

fn schema(path: &Path, line: Option<u64>, column: Option<usize>, message: impl Into<String>) -> Error {
    Error::Schema {
        path: Some(path.to_path_buf()),
        line,
        column,
        message: message.into(),
    }
}

struct Table {
    labels: Vec<String>,
    x: Array2<f64>,
}

/// Reads a `y,x1..xp` file. Labels are kept as text for the caller to parse.
fn read_labeled(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| schema(path, None, None, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| schema(path, Some(1), None, e.to_string()))?
        .clone();
    if header.len() < 2 {
        return Err(schema(path, Some(1), None, "header must be y,x1,...,xp with p >= 1"));
    }
    for (i, name) in header.iter().enumerate() {
        let expected = if i == 0 { "y".to_string() } else { format!("x{i}") };
        if name.trim() != expected {
            return Err(schema(
                path,
                Some(1),
                Some(i + 1),
                format!("expected header `{expected}`, found `{name}`"),
            ));
        }
    }
    let p = header.len() - 1;
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|pos| pos.line());
            schema(path, line, None, e.to_string())
        })?;
        let line = record.position().map(|pos| pos.line());
        if record.len() != p + 1 {
            return Err(schema(
                path,
                line,
                None,
                format!("expected {} fields, found {}", p + 1, record.len()),
            ));
        }
        labels.push(record[0].trim().to_string());
        for (j, field) in record.iter().enumerate().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| schema(path, line, Some(j + 1), format!("`{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(schema(path, line, Some(j + 1), "value is not finite"));
            }
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(schema(path, None, None, "no data rows"));
    }
    let x = Array2::from_shape_vec((labels.len(), p), values).expect("row-major values");
    Ok(Table { labels, x })
}

pub fn read_target_csv(path: &Path) -> Result<TargetDataset> {
    let table = read_labeled(path)?;
    let mut y = Vec::with_capacity(table.labels.len());
    for (row, label) in table.labels.iter().enumerate() {
        match label.as_str() {
            "0" => y.push(0u8),
            "1" => y.push(1u8),
            other => {
                return Err(schema(
                    path,
                    Some(row as u64 + 2),
                    Some(1),
                    format!("target label must be 0 or 1, found `{other}`"),
                ))
            }
        }
    }
    TargetDataset::new(table.x, &y)
}

/// Reads a source file. The class count `K` is the largest label unless
/// `classes` fixes it.
pub fn read_source_csv(path: &Path, classes: Option<usize>) -> Result<SourceDataset> {
    let table = read_labeled(path)?;
    let mut y = Vec::with_capacity(table.labels.len());
    for (row, label) in table.labels.iter().enumerate() {
        let v: usize = label.parse().map_err(|_| {
            schema(
                path,
                Some(row as u64 + 2),
                Some(1),
                format!("source label must be a non-negative integer, found `{label}`"),
            )
        })?;
        y.push(v);
    }
    let k = match classes {
        Some(k) => k,
        None => *y.iter().max().expect("non-empty"),
    };
    if k == 0 {
        return Err(schema(path, None, Some(1), "source labels need at least two classes"));
    }
    SourceDataset::new(table.x, y, k)
}

fn labeled_text<L: std::fmt::Display>(x: &Array2<f64>, labels: impl Iterator<Item = L>) -> String {
    let mut out = String::from("y");
    for j in 1..=x.ncols() {
        out.push_str(&format!(",x{j}"));
    }
    out.push('\n');
    for (row, label) in x.rows().into_iter().zip(labels) {
        out.push_str(&label.to_string());
        for v in row {
            out.push(',');
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn write_target_csv(path: &Path, data: &TargetDataset) -> Result<()> {
    let text = labeled_text(&data.x().to_owned(), data.labels().into_iter());
    atomic_write(path, text.as_bytes())
}

pub fn write_source_csv(path: &Path, data: &SourceDataset) -> Result<()> {
    let text = labeled_text(&data.x().to_owned(), data.labels().iter());
    atomic_write(path, text.as_bytes())
}

/// Writes a `p x K` matrix under a `beta_1..beta_K` header.
pub fn write_matrix_csv(path: &Path, b: &Array2<f64>) -> Result<()> {
    let mut out = (1..=b.ncols())
        .map(|k| format!("beta_{k}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in b.rows() {
        let line: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_model_csv(path: &Path, model: &SourceModel) -> Result<()> {
    write_matrix_csv(path, &model.b)
}

pub fn read_model_csv(path: &Path) -> Result<SourceModel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| schema(path, None, None, e.to_string()))?;
    let header = reader
        .headers()
        .map_err(|e| schema(path, Some(1), None, e.to_string()))?
        .clone();
    for (i, name) in header.iter().enumerate() {
        let expected = format!("beta_{}", i + 1);
        if name.trim() != expected {
            return Err(schema(
                path,
                Some(1),
                Some(i + 1),
                format!("expected header `{expected}`, found `{name}`"),
            ));
        }
    }
    let k = header.len();
    if k == 0 {
        return Err(schema(path, Some(1), None, "empty header"));
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|pos| pos.line());
            schema(path, line, None, e.to_string())
        })?;
        let line = record.position().map(|pos| pos.line());
        if record.len() != k {
            return Err(schema(path, line, None, format!("expected {k} fields, found {}", record.len())));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| schema(path, line, Some(j + 1), format!("`{field}` is not a number")))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(schema(path, None, None, "no coefficient rows"));
    }
    SourceModel::from_coefficients(Array2::from_shape_vec((rows, k), values).expect("row-major"))
}

/// `model.csv` -> `model.json`.
pub fn sidecar_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("json")
}

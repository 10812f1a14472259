//! File formats.
//!
//! Vectors are single-column CSV files with the header `value`. Matrices are
//! headerless dense CSV, one matrix row per line. Numbers are written with
//! 17 significant digits so finite doubles survive a round trip exactly.

use std::fs::File;
use std::path::Path;

use cvalue_core::simulation::format_f64;
use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;

use crate::error::{CliError, Result};

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::in_file(path, format!("cannot open: {e}")))
}

fn parse_number(path: &Path, line: u64, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| CliError::in_file(path, format!("line {line}: cannot parse {field:?} as a number")))?;
    if v.is_nan() {
        return Err(CliError::in_file(path, format!("line {line}: NaN is not allowed")));
    }
    Ok(v)
}

fn line_of(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

pub fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    let header = reader
        .headers()
        .map_err(|e| CliError::in_file(path, format!("line 1: {e}")))?
        .clone();
    if header.len() != 1 || header[0].trim() != "value" {
        return Err(CliError::in_file(path, "line 1: expected the single header `value`"));
    }
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::in_file(path, e))?;
        let line = line_of(&record, i as u64 + 2);
        if record.len() != 1 {
            return Err(CliError::in_file(path, format!("line {line}: expected 1 field, found {}", record.len())));
        }
        values.push(parse_number(path, line, &record[0])?);
    }
    if values.is_empty() {
        return Err(CliError::in_file(path, "no values"));
    }
    Ok(DVector::from_vec(values))
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::in_file(path, e))?;
        let line = line_of(&record, i as u64 + 1);
        let row = record
            .iter()
            .map(|f| parse_number(path, line, f))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(CliError::in_file(
                    path,
                    format!("line {line}: expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    let Some(cols) = rows.first().map(Vec::len) else {
        return Err(CliError::in_file(path, "no rows"));
    };
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| CliError::in_file(path, format!("cannot create: {e}")))
}

pub fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let fail = |e: csv::Error| CliError::in_file(path, e);
    w.write_record(["value"]).map_err(fail)?;
    for x in v.iter() {
        w.write_record([format_f64(*x)]).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::in_file(path, e))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| format_f64(*x)))
            .map_err(|e| CliError::in_file(path, e))?;
    }
    w.flush().map_err(|e| CliError::in_file(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::in_file(path, format!("cannot read: {e}")))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::in_file(path, format!("line {}: {e}", e.line())))
}

//! File formats: headerless numeric CSV (one matrix row per line), the JSON
//! matrix object `{"rows", "cols", "data"}`, and the pooled-spectrum table.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use eivreg::{Matrix, Spectrum, Vector};

use crate::CliError;

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`. `±inf` for infinities.
pub fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    } else {
        parse_matrix_csv(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Reads a vector stored as a single column or a single row.
pub fn read_vector(path: &Path) -> Result<Vector, CliError> {
    let m = read_matrix(path)?;
    if m.cols() != 1 && m.rows() != 1 {
        return Err(CliError::Input(format!(
            "{}: expected a single row or column, got {}x{}",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(Vector::new(m.into_vec())?)
}

pub fn parse_matrix_csv(text: &str) -> Result<Matrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        let line = record
            .position()
            .map_or(rows.len() as u64 + 1, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(j, cell)| parse_cell(cell, line, j + 1))
            .collect::<Result<Vec<f64>, CliError>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(CliError::Input(format!(
                    "row {line} has {} columns, expected {}",
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(CliError::Input("no numeric rows".into()));
    }
    Ok(Matrix::from_rows(&rows)?)
}

fn parse_cell(cell: &str, row: u64, col: usize) -> Result<f64, CliError> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(CliError::Input(format!(
            "row {row}, column {col}: non-finite value {v}"
        ))),
        Err(_) => Err(CliError::Input(format!(
            "row {row}, column {col}: cannot parse '{cell}' as a number"
        ))),
    }
}

/// One value per line.
pub fn vector_csv(v: &Vector) -> String {
    let mut out = String::new();
    for &x in v.as_slice() {
        out.push_str(&fmt_f64(x));
        out.push('\n');
    }
    out
}

/// `sample,eigenvalue` table, ascending within each sample.
pub fn spectrum_csv(spec: &Spectrum) -> String {
    let mut out = String::from("sample,eigenvalue\n");
    for (k, block) in spec.blocks().enumerate() {
        for &u in block {
            let _ = writeln!(out, "{k},{}", fmt_f64(u));
        }
    }
    out
}

/// Parses a `sample,eigenvalue` table; `#` lines are ignored.
pub fn parse_spectrum_csv(text: &str) -> Result<Spectrum, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["sample", "eigenvalue"] {
        return Err(CliError::Input(format!(
            "expected header 'sample,eigenvalue', got '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut blocks: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let sample: usize = record[0].parse().map_err(|_| {
            CliError::Input(format!(
                "row {line}, column 1: bad sample index '{}'",
                &record[0]
            ))
        })?;
        let value = parse_cell(&record[1], line, 2)?;
        match sample {
            s if s == blocks.len() => blocks.push(vec![value]),
            s if s + 1 == blocks.len() => blocks[s].push(value),
            _ => {
                return Err(CliError::Input(format!(
                    "row {line}: sample indices must be contiguous and increasing"
                )))
            }
        }
    }
    let n = blocks.first().map_or(0, Vec::len);
    if blocks.iter().any(|b| b.len() != n) {
        return Err(CliError::Input(
            "samples have different eigenvalue counts".into(),
        ));
    }
    Ok(Spectrum::from_eigenvalues(blocks.concat(), n)?)
}

//! CSV and JSON input helpers shared by the subcommands.

use std::path::Path;

use basedlab_core::quant::SampleMatrix;
use serde::de::DeserializeOwned;

use crate::errors::{AppError, AppResult};

/// Reads a numeric CSV into a matrix. A non-numeric first row is treated as
/// a header and skipped.
pub fn read_matrix(path: &Path) -> AppResult<SampleMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| AppError::validation(format!("{}: {e}", path.display())))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = record.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(e) => {
                if i == 0 {
                    continue; // header row
                }
                return Err(AppError::validation(format!(
                    "{}: row {}: {e}",
                    path.display(),
                    i + 1
                )));
            }
        }
    }
    SampleMatrix::from_rows(rows)
        .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))
}

/// Writes a matrix as plain CSV (no header).
pub fn matrix_to_csv(matrix: &SampleMatrix) -> String {
    let mut out = String::new();
    for i in 0..matrix.n_rows() {
        let row: Vec<String> = matrix.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Loads and deserializes a JSON file with a path-tagged error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> AppResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| AppError::validation(format!("{}: {e}", path.display())))
}

/// Parses a comma-separated list of floats from a flag value.
pub fn parse_f64_list(raw: &str, flag: &str) -> AppResult<Vec<f64>> {
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| AppError::validation(format!("--{flag} entry {part:?}: {e}")))
        })
        .collect()
}

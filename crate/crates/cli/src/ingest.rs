//! Ingestion of external time-per-row CSV data into a panel.
//!
//! The expected layout is one column per series and one row per consecutive
//! time point, oldest first, with a header row naming the columns. Columns
//! listed as treated become treated units, every other non-ignored column a
//! control. Ingestion is transformation-agnostic: values are taken as-is
//! (levels, rates or logs are the caller's concern).

use std::fs;
use std::path::Path;

use datekit_core::panel::{SeriesPanel, UnitSeries};

use crate::error::CliError;

pub fn ingest_csv(
    path: &Path,
    t_c: usize,
    treated_columns: &[String],
    ignore_columns: &[String],
) -> Result<SeriesPanel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        reason: "empty file".to_string(),
    })?;
    let names: Vec<String> = header
        .trim_end_matches('\r')
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let width = names.len();

    let used: Vec<usize> = (0..width)
        .filter(|&j| !ignore_columns.contains(&names[j]))
        .collect();
    if used.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            reason: "no data columns after ignores".to_string(),
        });
    }
    for treated in treated_columns {
        if !used.iter().any(|&j| &names[j] == treated) {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                reason: format!("treated column {treated} not found"),
            });
        }
    }

    let mut series: Vec<Vec<f64>> = vec![Vec::new(); used.len()];
    let mut n_rows = 0usize;
    for (line_idx, line) in lines {
        let row = line_idx + 1;
        let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if fields.len() != width {
            return Err(CliError::Validation {
                row,
                column: "-".to_string(),
                reason: format!("ragged row: {} fields, expected {width}", fields.len()),
            });
        }
        for (slot, &j) in used.iter().enumerate() {
            let raw = fields[j].trim();
            if raw.is_empty() {
                return Err(CliError::Validation {
                    row,
                    column: names[j].clone(),
                    reason: "missing value".to_string(),
                });
            }
            let value: f64 = raw.parse().map_err(|_| CliError::Validation {
                row,
                column: names[j].clone(),
                reason: format!("not a number: {raw}"),
            })?;
            if !value.is_finite() {
                return Err(CliError::Validation {
                    row,
                    column: names[j].clone(),
                    reason: format!("non-finite value: {raw}"),
                });
            }
            series[slot].push(value);
        }
        n_rows += 1;
    }
    if n_rows < 2 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            reason: format!("need at least 2 time points, got {n_rows}"),
        });
    }

    let units: Vec<UnitSeries> = used
        .iter()
        .zip(series)
        .map(|(&j, path_values)| {
            UnitSeries::new(path_values, treated_columns.contains(&names[j]))
        })
        .collect();
    Ok(SeriesPanel::new(units, t_c, n_rows - 1)?)
}

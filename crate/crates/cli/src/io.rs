//! File formats: the panel CSV, effect path CSVs, and the per-replication
//! results table.
//!
//! Panel CSV: header `unit_id,treated,y_0,...,y_T`, treated in {0,1}.
//! Effect path CSV: header `h,estimate,lower,upper`, bounds empty when the
//! method defines none.
//! Results CSV: one row per (replication, method, horizon) with central
//! interval bounds at the 19 nominal levels 5%..95%.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use datekit_core::date::DatePath;
use datekit_core::dlm::EffectDecomposition;
use datekit_core::eval::IntervalFamily;
use datekit_core::panel::{SeriesPanel, UnitSeries};

use crate::error::CliError;

pub fn write_panel_csv(path: &Path, panel: &SeriesPanel) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("unit_id,treated");
    for t in 0..=panel.horizon() {
        let _ = write!(out, ",y_{t}");
    }
    out.push('\n');
    for (i, unit) in panel.units().iter().enumerate() {
        let _ = write!(out, "{i},{}", if unit.treated { 1 } else { 0 });
        for v in &unit.path {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn read_panel_csv(path: &Path, t_c: usize) -> Result<SeriesPanel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| CliError::Parse {
        path: path.to_path_buf(),
        reason: "empty file".to_string(),
    })?;
    let columns: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if columns.len() < 3 || columns[0] != "unit_id" || columns[1] != "treated" {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            reason: "expected header unit_id,treated,y_0,...".to_string(),
        });
    }
    for (t, name) in columns[2..].iter().enumerate() {
        if *name != format!("y_{t}") {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                reason: format!("expected column y_{t}, found {name}"),
            });
        }
    }
    let width = columns.len();
    let mut units = Vec::new();
    for (line_idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = line_idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != width {
            return Err(CliError::Validation {
                row,
                column: "-".to_string(),
                reason: format!("ragged row: {} fields, expected {width}", fields.len()),
            });
        }
        let treated = match fields[1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(CliError::Validation {
                    row,
                    column: "treated".to_string(),
                    reason: format!("expected 0 or 1, found {other}"),
                })
            }
        };
        let mut path_values = Vec::with_capacity(width - 2);
        for (j, field) in fields[2..].iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| CliError::Validation {
                row,
                column: columns[2 + j].to_string(),
                reason: format!("not a number: {field}"),
            })?;
            if !value.is_finite() {
                return Err(CliError::Validation {
                    row,
                    column: columns[2 + j].to_string(),
                    reason: "non-finite value".to_string(),
                });
            }
            path_values.push(value);
        }
        units.push(UnitSeries::new(path_values, treated));
    }
    let horizon = width - 3;
    Ok(SeriesPanel::new(units, t_c, horizon)?)
}

fn push_optional(out: &mut String, value: Option<f64>) {
    match value {
        Some(v) => {
            let _ = write!(out, ",{v}");
        }
        None => out.push(','),
    }
}

pub fn write_date_csv(path: &Path, date: &DatePath) -> Result<(), CliError> {
    let mut out = String::from("h,estimate,lower,upper\n");
    for h in 0..date.n_horizons() {
        let _ = write!(out, "{h},{}", date.estimate[h]);
        push_optional(&mut out, date.band.as_ref().map(|b| b.lower[h]));
        push_optional(&mut out, date.band.as_ref().map(|b| b.upper[h]));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

pub fn write_decomposition_csv(
    path: &Path,
    decomposition: &EffectDecomposition,
) -> Result<(), CliError> {
    let mut out = String::from(
        "h,spot,spot_lower,spot_upper,persistent,persistent_lower,persistent_upper,trend,trend_lower,trend_upper\n",
    );
    let n = decomposition.spot.n_horizons();
    for h in 0..n {
        let _ = write!(out, "{h}");
        for part in [
            &decomposition.spot,
            &decomposition.persistent,
            &decomposition.trend,
        ] {
            let band = part.band.as_ref().expect("decomposition carries bands");
            let _ = write!(out, ",{},{},{}", part.estimate[h], band.lower[h], band.upper[h]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// The nominal interval levels recorded per row: 5%, 10%, ..., 95%.
pub fn result_levels() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

pub fn results_header() -> String {
    let mut header = String::from("rep,method,h,estimate");
    for level in result_levels() {
        let pct = (level * 100.0).round() as u32;
        let _ = write!(header, ",lo{pct:02},hi{pct:02}");
    }
    header
}

/// One emitted estimate row.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub rep: u64,
    pub method: String,
    pub h: usize,
    pub estimate: f64,
    /// Bounds per level, aligned with [`result_levels`]; `None` when the
    /// method reports no intervals.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        let mut line = format!("{},{},{},{}", self.rep, self.method, self.h, self.estimate);
        match &self.bounds {
            Some(bounds) => {
                for (lo, hi) in bounds {
                    let _ = write!(line, ",{lo},{hi}");
                }
            }
            None => {
                for _ in 0..result_levels().len() {
                    line.push_str(",,");
                }
            }
        }
        line
    }

    pub fn parse(line: &str, row: usize) -> Result<Self, CliError> {
        let fields: Vec<&str> = line.split(',').collect();
        let expected = 4 + 2 * result_levels().len();
        if fields.len() != expected {
            return Err(CliError::Validation {
                row,
                column: "-".to_string(),
                reason: format!("ragged row: {} fields, expected {expected}", fields.len()),
            });
        }
        let parse_f = |s: &str, col: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| CliError::Validation {
                row,
                column: col.to_string(),
                reason: format!("not a number: {s}"),
            })
        };
        let rep = fields[0].parse().map_err(|_| CliError::Validation {
            row,
            column: "rep".to_string(),
            reason: format!("not an integer: {}", fields[0]),
        })?;
        let h = fields[2].parse().map_err(|_| CliError::Validation {
            row,
            column: "h".to_string(),
            reason: format!("not an integer: {}", fields[2]),
        })?;
        let estimate = parse_f(fields[3], "estimate")?;
        let bounds = if fields[4].is_empty() {
            None
        } else {
            let mut pairs = Vec::with_capacity(result_levels().len());
            for i in 0..result_levels().len() {
                let lo = parse_f(fields[4 + 2 * i], "lower")?;
                let hi = parse_f(fields[5 + 2 * i], "upper")?;
                pairs.push((lo, hi));
            }
            Some(pairs)
        };
        Ok(ResultRow {
            rep,
            method: fields[1].to_string(),
            h,
            estimate,
            bounds,
        })
    }
}

/// Bounds at every reporting level for one estimate.
pub fn bounds_at_levels(estimate: &[f64], family: &IntervalFamily) -> Vec<Vec<(f64, f64)>> {
    let levels = result_levels();
    let mut per_h: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(levels.len()); estimate.len()];
    for &level in &levels {
        let (lower, upper) = family.central(level);
        for h in 0..estimate.len() {
            per_h[h].push((lower[h].min(estimate[h]), upper[h].max(estimate[h])));
        }
    }
    per_h
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn panel_round_trip() {
        let units = vec![
            UnitSeries::new(vec![0.5, 1.0, -2.25, 3.125], true),
            UnitSeries::new(vec![0.0, 0.125, 4.5, -1.75], false),
        ];
        let panel = SeriesPanel::new(units, 2, 3).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        write_panel_csv(&path, &panel).unwrap();
        let back = read_panel_csv(&path, 2).unwrap();
        assert_eq!(panel, back);
    }

    #[test]
    fn bad_cells_are_located() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("panel.csv");
        std::fs::write(&path, "unit_id,treated,y_0,y_1\n0,1,0.5,oops\n").unwrap();
        match read_panel_csv(&path, 1).unwrap_err() {
            CliError::Validation { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "y_1");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn result_rows_round_trip() {
        let row = ResultRow {
            rep: 3,
            method: "dlm".to_string(),
            h: 7,
            estimate: 0.25,
            bounds: Some(result_levels().iter().map(|l| (-l, *l)).collect()),
        };
        let parsed = ResultRow::parse(&row.to_csv_line(), 2).unwrap();
        assert_eq!(parsed, row);

        let bare = ResultRow {
            bounds: None,
            ..row.clone()
        };
        let parsed = ResultRow::parse(&bare.to_csv_line(), 2).unwrap();
        assert_eq!(parsed, bare);
    }
}

//! Aggregation of replication result directories into the metric tables:
//! the scenario-by-method MSE/CP table, the quantile-coverage curves, and
//! per-horizon traces.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use datekit_core::config::ScenarioConfig;
use datekit_core::eval::{build_table, level_key, CellKey, CellResults, MetricTable};

use crate::error::CliError;
use crate::io::{result_levels, ResultRow};
use crate::runner::{CONFIG_FILE, FAILURES_FILE, RESULTS_FILE, TRUTH_FILE};

/// All replication rows of one run directory, keyed for aggregation.
pub struct RunData {
    pub config: ScenarioConfig,
    pub truth: Vec<f64>,
    pub rows: Vec<ResultRow>,
    /// (rep, method) pairs that failed.
    pub failures: Vec<(u64, String)>,
}

pub fn load_run(dir: &Path) -> Result<RunData, CliError> {
    let config_path = dir.join(CONFIG_FILE);
    let config_text =
        fs::read_to_string(&config_path).map_err(|e| CliError::io(&config_path, e))?;
    let config: ScenarioConfig =
        serde_json::from_str(&config_text).map_err(|e| CliError::Parse {
            path: config_path.clone(),
            reason: e.to_string(),
        })?;

    let truth_path = dir.join(TRUTH_FILE);
    let truth_text = fs::read_to_string(&truth_path).map_err(|e| CliError::io(&truth_path, e))?;
    let mut truth = Vec::new();
    for (idx, line) in truth_text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        let value = line
            .split(',')
            .nth(1)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| CliError::Validation {
                row: idx + 1,
                column: "estimate".to_string(),
                reason: "malformed truth row".to_string(),
            })?;
        truth.push(value);
    }

    let results_path = dir.join(RESULTS_FILE);
    let results_text =
        fs::read_to_string(&results_path).map_err(|e| CliError::io(&results_path, e))?;
    let mut rows = Vec::new();
    for (idx, line) in results_text.lines().enumerate().skip(1) {
        if line.is_empty() {
            continue;
        }
        rows.push(ResultRow::parse(line, idx + 1)?);
    }

    let mut failures = Vec::new();
    if let Ok(text) = fs::read_to_string(dir.join(FAILURES_FILE)) {
        for line in text.lines().skip(1) {
            let fields: Vec<&str> = line.splitn(3, ',').collect();
            if fields.len() == 3 {
                if let Ok(rep) = fields[0].parse::<u64>() {
                    failures.push((rep, fields[1].to_string()));
                }
            }
        }
    }
    Ok(RunData {
        config,
        truth,
        rows,
        failures,
    })
}

/// Coverage tallies of one (cell, level) pair.
#[derive(Default, Clone)]
struct LevelTally {
    hits: usize,
    total: usize,
}

pub struct ReportTables {
    pub table: MetricTable,
    pub quantile_csv: String,
    pub per_horizon_csv: String,
    pub table_csv: String,
}

/// Index of the 95% level within [`result_levels`].
fn level95_index() -> usize {
    result_levels()
        .iter()
        .position(|l| (l - 0.95).abs() < 1e-9)
        .expect("95% level is reported")
}

pub fn build_report(runs: &[RunData], reference: &CellKey) -> Result<ReportTables, CliError> {
    let mut cells: BTreeMap<CellKey, CellResults> = BTreeMap::new();
    let mut curves: BTreeMap<CellKey, Vec<LevelTally>> = BTreeMap::new();
    let mut per_horizon: BTreeMap<CellKey, Vec<(f64, usize, usize, usize)>> = BTreeMap::new();
    let n_levels = result_levels().len();
    let i95 = level95_index();

    for run in runs {
        let scenario = run.config.kind.as_str().to_string();
        let horizon = run.config.horizon;
        // Group rows by (method, rep).
        let mut grouped: BTreeMap<(String, u64), Vec<&ResultRow>> = BTreeMap::new();
        for row in &run.rows {
            grouped
                .entry((row.method.clone(), row.rep))
                .or_default()
                .push(row);
        }
        for ((method, _rep), mut rows) in grouped {
            rows.sort_by_key(|r| r.h);
            if rows.len() != run.truth.len() {
                continue;
            }
            let key = CellKey {
                scenario: scenario.clone(),
                horizon,
                method: method.clone(),
            };
            let cell = cells.entry(key.clone()).or_default();
            let curve = curves
                .entry(key.clone())
                .or_insert_with(|| vec![LevelTally::default(); n_levels]);
            let traces = per_horizon
                .entry(key)
                .or_insert_with(|| vec![(0.0, 0, 0, 0); run.truth.len()]);

            let mut squared = 0.0;
            for (h, row) in rows.iter().enumerate() {
                let err = row.estimate - run.truth[h];
                squared += err * err;
                traces[h].0 += err * err;
                traces[h].3 += 1;
                if let Some(bounds) = &row.bounds {
                    let (lo, hi) = bounds[i95];
                    if lo <= run.truth[h] && run.truth[h] <= hi {
                        cell.coverage_hits += 1;
                        traces[h].1 += 1;
                    }
                    cell.coverage_total += 1;
                    traces[h].2 += 1;
                    for (i, &(lo, hi)) in bounds.iter().enumerate() {
                        if lo <= run.truth[h] && run.truth[h] <= hi {
                            curve[i].hits += 1;
                        }
                        curve[i].total += 1;
                    }
                }
            }
            cell.mse.push(squared / run.truth.len() as f64);
        }
        for (_, method) in &run.failures {
            let key = CellKey {
                scenario: scenario.clone(),
                horizon,
                method: method.clone(),
            };
            cells.entry(key).or_default().failures += 1;
        }
    }

    let table = build_table(&cells, reference)?;

    let mut table_csv =
        String::from("scenario,horizon,method,mse_raw,mse_standardized,cp_95,n_reps,n_failed\n");
    for (key, cell) in &table.cells {
        let cp = cell
            .cp_95
            .map(|c| format!("{c}"))
            .unwrap_or_default();
        let _ = writeln!(
            table_csv,
            "{},{},{},{},{},{},{},{}",
            key.scenario,
            key.horizon,
            key.method,
            cell.mse_raw,
            cell.mse_standardized,
            cp,
            cell.n_replications,
            cell.n_failures
        );
    }

    let mut quantile_csv = String::from("scenario,horizon,method,level,coverage,lower,upper,n\n");
    let levels = result_levels();
    for (key, tallies) in &curves {
        for (i, tally) in tallies.iter().enumerate() {
            if tally.total == 0 {
                continue;
            }
            let p = tally.hits as f64 / tally.total as f64;
            let half = 1.959964 * (p * (1.0 - p) / tally.total as f64).sqrt();
            let _ = writeln!(
                quantile_csv,
                "{},{},{},{},{},{},{},{}",
                key.scenario,
                key.horizon,
                key.method,
                level_key(levels[i]),
                p,
                (p - half).max(0.0),
                (p + half).min(1.0),
                tally.total
            );
        }
    }

    let mut per_horizon_csv = String::from("scenario,horizon,method,h,mse,cp_95\n");
    for (key, traces) in &per_horizon {
        for (h, &(sq, hits, total, n)) in traces.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let cp = if total > 0 {
                format!("{}", hits as f64 / total as f64)
            } else {
                String::new()
            };
            let _ = writeln!(
                per_horizon_csv,
                "{},{},{},{},{},{}",
                key.scenario,
                key.horizon,
                key.method,
                h,
                sq / n as f64,
                cp
            );
        }
    }

    Ok(ReportTables {
        table,
        quantile_csv,
        per_horizon_csv,
        table_csv,
    })
}

pub fn write_report(tables: &ReportTables, out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    for (name, content) in [
        ("table1.csv", &tables.table_csv),
        ("quantile_coverage.csv", &tables.quantile_csv),
        ("per_horizon.csv", &tables.per_horizon_csv),
    ] {
        let path = out_dir.join(name);
        fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
    }
    Ok(())
}

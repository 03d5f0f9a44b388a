//! Monte Carlo evaluation metrics: mean squared error, coverage probability,
//! and the quantile-coverage curve.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::date::DatePath;
use crate::stats::{quantile_sorted, z_for_level};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("paths have different horizon counts: {got} vs {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("path reports no interval at level {0}")]
    MissingBounds(f64),
    #[error("reference cell is missing from the result set")]
    MissingReference,
    #[error("replication set is empty")]
    EmptyReplications,
}

/// Mean over horizons of the squared estimate error.
pub fn mse(estimate: &DatePath, truth: &DatePath) -> Result<f64, EvalError> {
    if estimate.n_horizons() != truth.n_horizons() {
        return Err(EvalError::LengthMismatch {
            got: estimate.n_horizons(),
            expected: truth.n_horizons(),
        });
    }
    let n = estimate.n_horizons() as f64;
    Ok(estimate
        .estimate
        .iter()
        .zip(&truth.estimate)
        .map(|(e, t)| (e - t) * (e - t))
        .sum::<f64>()
        / n)
}

/// Fraction of horizons whose closed interval contains the truth.
pub fn coverage(estimate: &DatePath, truth: &DatePath, level: f64) -> Result<f64, EvalError> {
    let band = estimate
        .band
        .as_ref()
        .filter(|b| (b.level - level).abs() < 1e-9)
        .ok_or(EvalError::MissingBounds(level))?;
    if estimate.n_horizons() != truth.n_horizons() {
        return Err(EvalError::LengthMismatch {
            got: estimate.n_horizons(),
            expected: truth.n_horizons(),
        });
    }
    let hits = truth
        .estimate
        .iter()
        .enumerate()
        .filter(|(h, &t)| band.lower[*h] <= t && t <= band.upper[*h])
        .count();
    Ok(hits as f64 / truth.n_horizons() as f64)
}

/// Interval family of one replication, queriable at any central level.
#[derive(Debug, Clone)]
pub enum IntervalFamily {
    /// Symmetric normal intervals around the estimate.
    Normal { estimate: Vec<f64>, se: Vec<f64> },
    /// Empirical quantiles of per-draw effect paths (draws x horizons).
    Draws(Vec<Vec<f64>>),
}

impl IntervalFamily {
    pub fn n_horizons(&self) -> usize {
        match self {
            IntervalFamily::Normal { estimate, .. } => estimate.len(),
            IntervalFamily::Draws(draws) => draws.first().map_or(0, |d| d.len()),
        }
    }

    /// Central interval bounds at the given level.
    pub fn central(&self, level: f64) -> (Vec<f64>, Vec<f64>) {
        match self {
            IntervalFamily::Normal { estimate, se } => {
                let z = if level <= 0.0 { 0.0 } else { z_for_level(level) };
                let lower = estimate.iter().zip(se).map(|(e, s)| e - z * s).collect();
                let upper = estimate.iter().zip(se).map(|(e, s)| e + z * s).collect();
                (lower, upper)
            }
            IntervalFamily::Draws(draws) => {
                let horizons = self.n_horizons();
                let mut lower = Vec::with_capacity(horizons);
                let mut upper = Vec::with_capacity(horizons);
                let mut column = vec![0.0; draws.len()];
                for h in 0..horizons {
                    for (s, row) in draws.iter().enumerate() {
                        column[s] = row[h];
                    }
                    column.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    lower.push(quantile_sorted(&column, (1.0 - level) / 2.0));
                    upper.push(quantile_sorted(&column, (1.0 + level) / 2.0));
                }
                (lower, upper)
            }
        }
    }
}

/// One point of the quantile-coverage curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint {
    pub coverage: f64,
    /// Pointwise binomial 95% band around the empirical coverage.
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

/// The nominal levels of the reported curve: 5% to 95% in steps of 5%.
pub fn curve_levels() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

/// Empirical coverage of the truth by central intervals at each nominal
/// level, pooled over horizons and replications.
pub fn quantile_coverage_curve(
    replications: &[IntervalFamily],
    truth: &DatePath,
    levels: &[f64],
) -> Result<BTreeMap<u32, CoveragePoint>, EvalError> {
    if replications.is_empty() {
        return Err(EvalError::EmptyReplications);
    }
    for rep in replications {
        if rep.n_horizons() != truth.n_horizons() {
            return Err(EvalError::LengthMismatch {
                got: rep.n_horizons(),
                expected: truth.n_horizons(),
            });
        }
    }
    let mut curve = BTreeMap::new();
    for &level in levels {
        let mut hits = 0usize;
        let mut total = 0usize;
        for rep in replications {
            let (lower, upper) = rep.central(level);
            for h in 0..truth.n_horizons() {
                let t = truth.estimate[h];
                if lower[h] <= t && t <= upper[h] {
                    hits += 1;
                }
                total += 1;
            }
        }
        let p = hits as f64 / total as f64;
        let half = 1.959964 * (p * (1.0 - p) / total as f64).sqrt();
        curve.insert(
            level_key(level),
            CoveragePoint {
                coverage: p,
                lower: (p - half).max(0.0),
                upper: (p + half).min(1.0),
                n: total,
            },
        );
    }
    Ok(curve)
}

/// Curve keys are levels in whole percent to keep the map exact.
pub fn level_key(level: f64) -> u32 {
    (level * 100.0).round() as u32
}

/// Identifies one cell of the scenario-by-method table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellKey {
    pub scenario: String,
    pub horizon: usize,
    pub method: String,
}

/// Per-replication scores of one cell.
#[derive(Debug, Clone, Default)]
pub struct CellResults {
    pub mse: Vec<f64>,
    /// Per-replication (covered, total) horizon counts at nominal 95%.
    pub coverage_hits: usize,
    pub coverage_total: usize,
    pub failures: usize,
}

/// A filled metric table.
#[derive(Debug, Clone)]
pub struct MetricTable {
    pub cells: BTreeMap<CellKey, MetricCell>,
    pub reference: CellKey,
}

#[derive(Debug, Clone)]
pub struct MetricCell {
    pub mse_raw: f64,
    pub mse_standardized: f64,
    /// Pooled coverage at nominal 95%, absent for interval-free methods.
    pub cp_95: Option<f64>,
    pub n_replications: usize,
    pub n_failures: usize,
}

/// Builds the table and standardizes every MSE by the reference cell's.
pub fn build_table(
    results: &BTreeMap<CellKey, CellResults>,
    reference: &CellKey,
) -> Result<MetricTable, EvalError> {
    let reference_mse = results
        .get(reference)
        .filter(|cell| !cell.mse.is_empty())
        .map(|cell| cell.mse.iter().sum::<f64>() / cell.mse.len() as f64)
        .ok_or(EvalError::MissingReference)?;
    let mut cells = BTreeMap::new();
    for (key, cell) in results {
        if cell.mse.is_empty() {
            continue;
        }
        let mse_raw = cell.mse.iter().sum::<f64>() / cell.mse.len() as f64;
        let cp_95 = if cell.coverage_total > 0 {
            Some(cell.coverage_hits as f64 / cell.coverage_total as f64)
        } else {
            None
        };
        cells.insert(
            key.clone(),
            MetricCell {
                mse_raw,
                mse_standardized: mse_raw / reference_mse,
                cp_95,
                n_replications: cell.mse.len(),
                n_failures: cell.failures,
            },
        );
    }
    Ok(MetricTable {
        cells,
        reference: reference.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(values: &[f64]) -> DatePath {
        DatePath::point(values.to_vec())
    }

    #[test]
    fn mse_of_exact_estimate_is_zero() {
        let truth = path(&[0.3, -0.2, 0.1]);
        assert_eq!(mse(&truth, &truth).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_gives_squared_offset() {
        let truth = path(&[0.3, -0.2, 0.1]);
        let off = path(&[0.8, 0.3, 0.6]);
        assert!((mse(&off, &truth).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn two_point_hand_example() {
        let truth = path(&[0.0, 0.0]);
        let est = path(&[1.0, 3.0]);
        assert!((mse(&est, &truth).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths_error() {
        let truth = path(&[0.0, 0.0]);
        let est = path(&[1.0]);
        assert!(matches!(
            mse(&est, &truth).unwrap_err(),
            EvalError::LengthMismatch { .. }
        ));
    }

    #[test]
    fn boundary_truth_counts_as_covered() {
        let est = DatePath::with_band(vec![0.5], vec![0.0], vec![1.0], 0.95).unwrap();
        let truth = path(&[0.0]);
        assert_eq!(coverage(&est, &truth, 0.95).unwrap(), 1.0);
    }

    #[test]
    fn degenerate_band_at_truth_covers() {
        let truth = path(&[0.4, 0.4]);
        let est = DatePath::exact(vec![0.4, 0.4]);
        assert_eq!(coverage(&est, &truth, 0.95).unwrap(), 1.0);
    }

    #[test]
    fn half_covered_band() {
        let est = DatePath::with_band(vec![0.5, 0.5], vec![0.0, 0.0], vec![1.0, 1.0], 0.95)
            .unwrap();
        let truth = path(&[0.5, 2.0]);
        assert_eq!(coverage(&est, &truth, 0.95).unwrap(), 0.5);
    }

    #[test]
    fn missing_bounds_are_reported() {
        let est = path(&[0.5]);
        let truth = path(&[0.5]);
        assert_eq!(
            coverage(&est, &truth, 0.95).unwrap_err(),
            EvalError::MissingBounds(0.95)
        );
    }

    #[test]
    fn zero_level_interval_has_zero_coverage() {
        let reps = vec![IntervalFamily::Normal {
            estimate: vec![0.1, 0.2],
            se: vec![1.0, 1.0],
        }];
        let truth = path(&[0.5, 0.7]);
        let curve = quantile_coverage_curve(&reps, &truth, &[0.0]).unwrap();
        assert_eq!(curve[&0].coverage, 0.0);
    }

    #[test]
    fn standardization_is_scale_invariant() {
        let mut results = BTreeMap::new();
        let reference = CellKey {
            scenario: "many_many".into(),
            horizon: 72,
            method: "mean".into(),
        };
        let other = CellKey {
            scenario: "one_none".into(),
            horizon: 72,
            method: "lm".into(),
        };
        for scale in [1.0, 17.0] {
            results.insert(
                reference.clone(),
                CellResults {
                    mse: vec![2.0 * scale],
                    ..Default::default()
                },
            );
            results.insert(
                other.clone(),
                CellResults {
                    mse: vec![6.0 * scale],
                    ..Default::default()
                },
            );
            let table = build_table(&results, &reference).unwrap();
            assert!((table.cells[&reference].mse_standardized - 1.0).abs() < 1e-12);
            assert!((table.cells[&other].mse_standardized - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_reference_is_an_error() {
        let results = BTreeMap::new();
        let reference = CellKey {
            scenario: "many_many".into(),
            horizon: 72,
            method: "mean".into(),
        };
        assert_eq!(
            build_table(&results, &reference).unwrap_err(),
            EvalError::MissingReference
        );
    }
}

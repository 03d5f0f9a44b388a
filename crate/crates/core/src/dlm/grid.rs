//! Discount factor selection by one-step-ahead predictive density.

use super::filter::forward_filter;
use super::{DlmError, DlmSpec};
use crate::design::InterventionDesign;

/// The reference grid: all pairs from `[0.95, 0.99, 0.999]`.
pub fn default_discount_grid() -> Vec<(f64, f64)> {
    let values = [0.95, 0.99, 0.999];
    let mut grid = Vec::with_capacity(9);
    for &delta in &values {
        for &beta_v in &values {
            grid.push((delta, beta_v));
        }
    }
    grid
}

/// Returns the `(delta, beta_v)` pair maximizing the total one-step log
/// predictive density over the full series; ties break toward larger
/// `delta`, then larger `beta_v`.
///
/// Grid points where the filter breaks down numerically are skipped; the
/// error propagates only if every point fails.
pub fn grid_search_discounts(
    y: &[f64],
    design: &InterventionDesign,
    spec: &DlmSpec,
    grid: &[(f64, f64)],
) -> Result<(f64, f64), DlmError> {
    if grid.is_empty() {
        return Err(DlmError::EmptyGrid);
    }
    let mut points: Vec<(f64, f64)> = grid.to_vec();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut best: Option<((f64, f64), f64)> = None;
    let mut last_err = None;
    for &(delta, beta_v) in &points {
        let candidate = spec.clone().with_discounts(delta, beta_v);
        match forward_filter(y, design, &candidate) {
            Ok(filtered) => {
                let lp = filtered.log_predictive;
                // Ascending iteration order plus `>=` realizes the tie rule.
                if best.map_or(true, |(_, best_lp)| lp >= best_lp) {
                    best = Some(((delta, beta_v), lp));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((pair, _)) => Ok(pair),
        None => Err(last_err.expect("at least one grid point was attempted")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::build_design;
    use crate::dlm::ObservationForm;
    use crate::panel::{SeriesPanel, UnitSeries};

    #[test]
    fn default_grid_is_the_three_by_three_product() {
        let grid = default_discount_grid();
        assert_eq!(grid.len(), 9);
        assert!(grid.contains(&(0.95, 0.999)));
        assert!(grid.contains(&(0.999, 0.95)));
    }

    #[test]
    fn singleton_grid_is_returned_as_is() {
        let path: Vec<f64> = (0..20).map(|i| 0.05 + 0.01 * (i as f64).sin()).collect();
        let horizon = path.len() - 1;
        let panel =
            SeriesPanel::new(vec![UnitSeries::new(path, true)], 10, horizon).unwrap();
        let unit = &panel.units()[0];
        let design = build_design(&panel, unit);
        let spec = DlmSpec::intervention(ObservationForm::LagCoefficient);
        let chosen =
            grid_search_discounts(&unit.path[1..], &design, &spec, &[(0.99, 0.99)]).unwrap();
        assert_eq!(chosen, (0.99, 0.99));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let path: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let horizon = path.len() - 1;
        let panel =
            SeriesPanel::new(vec![UnitSeries::new(path, true)], 10, horizon).unwrap();
        let unit = &panel.units()[0];
        let design = build_design(&panel, unit);
        let spec = DlmSpec::intervention(ObservationForm::LagCoefficient);
        assert_eq!(
            grid_search_discounts(&unit.path[1..], &design, &spec, &[]).unwrap_err(),
            DlmError::EmptyGrid
        );
    }
}

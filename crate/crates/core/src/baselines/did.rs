//! Difference-in-differences for the one-treated/one-control panel:
//! per-period post-treatment differences, centered by the difference of
//! pre-treatment averages. Reports no interval.

use super::{BaselineError, BaselineFit, BaselineMethod};
use crate::date::DatePath;
use crate::panel::SeriesPanel;

pub fn fit_did(panel: &SeriesPanel) -> Result<BaselineFit, BaselineError> {
    if panel.n_treated() != 1 || panel.n_control() != 1 {
        return Err(BaselineError::WrongScenario {
            method: "difference-in-differences",
            expected: "one-treated / one-control",
        });
    }
    let treated = &panel.first_treated().unwrap().path;
    let control = &panel.control_units().next().unwrap().path;
    let t_c = panel.t_c();
    let pre_gap: f64 = (0..t_c)
        .map(|t| treated[t] - control[t])
        .sum::<f64>()
        / t_c as f64;
    let estimate: Vec<f64> = (0..panel.n_horizons())
        .map(|h| (treated[t_c + h] - control[t_c + h]) - pre_gap)
        .collect();
    let pre_var = (0..t_c)
        .map(|t| {
            let d = treated[t] - control[t] - pre_gap;
            d * d
        })
        .sum::<f64>()
        / (t_c.max(2) - 1) as f64;
    Ok(BaselineFit {
        method: BaselineMethod::Did,
        coefficients: vec![pre_gap],
        coefficient_se: vec![],
        residual_variance: pre_var,
        date: DatePath::point(estimate),
    })
}

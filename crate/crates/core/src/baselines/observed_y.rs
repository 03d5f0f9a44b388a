//! Observed-series effect estimates: the observed treated path contrasted
//! with a direct stand-in for the control mean.
//!
//! * one treated, many controls — treated minus the pointwise control mean,
//!   with normal intervals from the control-mean standard error;
//! * one treated, one control — the raw difference, no intervals;
//! * one treated, no controls — treated minus the LM-estimated control path,
//!   with intervals inherited from that fit.

use super::lm::fit_lm;
use super::{BaselineError, BaselineFit, BaselineMethod};
use crate::date::DatePath;
use crate::panel::SeriesPanel;
use crate::stats::z_for_level;

pub fn observed_y(panel: &SeriesPanel) -> Result<BaselineFit, BaselineError> {
    if panel.n_treated() != 1 {
        return Err(BaselineError::WrongScenario {
            method: "observed series",
            expected: "single-treated",
        });
    }
    let treated = &panel.first_treated().unwrap().path;
    let t_c = panel.t_c();
    let horizons = panel.n_horizons();
    let n_controls = panel.n_control();

    let (date, residual_variance) = if n_controls >= 2 {
        let z = z_for_level(0.95);
        let mut estimate = Vec::with_capacity(horizons);
        let mut lower = Vec::with_capacity(horizons);
        let mut upper = Vec::with_capacity(horizons);
        for h in 0..horizons {
            let t = t_c + h;
            let values: Vec<f64> = panel.control_units().map(|u| u.path[t]).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (values.len() - 1) as f64;
            let se = (var / values.len() as f64).sqrt();
            let diff = treated[t] - mean;
            estimate.push(diff);
            lower.push(diff - z * se);
            upper.push(diff + z * se);
        }
        (
            DatePath::with_band(estimate, lower, upper, 0.95).expect("normal band is ordered"),
            0.0,
        )
    } else if n_controls == 1 {
        let control = &panel.control_units().next().unwrap().path;
        let estimate: Vec<f64> = (0..horizons)
            .map(|h| treated[t_c + h] - control[t_c + h])
            .collect();
        (DatePath::point(estimate), 0.0)
    } else {
        // The counterfactual control path of the LM baseline is its fitted
        // intercept; the interval follows from that coefficient's variance.
        let lm = fit_lm(panel)?;
        let control_level = lm.coefficients[0];
        let se = lm.coefficient_se[0];
        let z = z_for_level(0.95);
        let estimate: Vec<f64> = (0..horizons)
            .map(|h| treated[t_c + h] - control_level)
            .collect();
        let lower: Vec<f64> = estimate.iter().map(|e| e - z * se).collect();
        let upper: Vec<f64> = estimate.iter().map(|e| e + z * se).collect();
        (
            DatePath::with_band(estimate, lower, upper, 0.95).expect("normal band is ordered"),
            lm.residual_variance,
        )
    };

    Ok(BaselineFit {
        method: BaselineMethod::ObservedY,
        coefficients: vec![],
        coefficient_se: vec![],
        residual_variance,
        date,
    })
}

//! Linear regression baselines on the intervention indicators.
//!
//! `fit_lm` regresses the outcome on an intercept and the three indicator
//! rows; `fit_lm_ar1` adds the lagged outcome. Effect paths are regenerated
//! from the coefficients alone, with pointwise confidence intervals from the
//! coefficient covariance propagated through the generated path.

use nalgebra::{DMatrix, DVector};

use super::ols::ols;
use super::{BaselineError, BaselineFit, BaselineMethod};
use crate::date::DatePath;
use crate::design::build_design;
use crate::panel::{SeriesPanel, UnitSeries};
use crate::stats::z_for_level;

pub(crate) fn target_unit(panel: &SeriesPanel) -> &UnitSeries {
    panel.first_treated().unwrap_or(&panel.units()[0])
}

fn date_from_gradients(
    estimate: Vec<f64>,
    gradients: &[DVector<f64>],
    covariance: &DMatrix<f64>,
    extra_var: f64,
) -> DatePath {
    let z = z_for_level(0.95);
    let mut lower = Vec::with_capacity(estimate.len());
    let mut upper = Vec::with_capacity(estimate.len());
    for (h, g) in gradients.iter().enumerate() {
        let var = (g.transpose() * covariance * g)[(0, 0)].max(0.0) + extra_var;
        let half = z * var.sqrt();
        lower.push(estimate[h] - half);
        upper.push(estimate[h] + half);
    }
    DatePath::with_band(estimate, lower, upper, 0.95).expect("normal band is ordered")
}

/// OLS of `y_t` on intercept + spot + persistent + trend over `t = 0 ..= T`.
pub fn fit_lm(panel: &SeriesPanel) -> Result<BaselineFit, BaselineError> {
    let unit = target_unit(panel);
    let design = build_design(panel, unit);
    let n = unit.path.len();
    if n < 5 {
        return Err(BaselineError::TooFewObservations { needed: 5, got: n });
    }
    let x = DMatrix::from_fn(n, 4, |t, j| match j {
        0 => 1.0,
        1 => design.spot_at(t),
        2 => design.persistent_at(t),
        _ => design.trend_at(t),
    });
    let y = DVector::from_fn(n, |t, _| unit.path[t]);
    let fit = ols(&x, &y)?;

    // The intercept is shared by both regimes, so the contrast involves only
    // the indicator coefficients.
    let horizons = panel.n_horizons();
    let mut estimate = Vec::with_capacity(horizons);
    let mut gradients = Vec::with_capacity(horizons);
    for h in 0..horizons {
        let t = panel.t_c() + h;
        let g = DVector::from_vec(vec![
            0.0,
            design.spot_at(t),
            design.persistent_at(t),
            design.trend_at(t),
        ]);
        estimate.push(fit.beta[1] * g[1] + fit.beta[2] * g[2] + fit.beta[3] * g[3]);
        gradients.push(g);
    }
    Ok(BaselineFit {
        method: BaselineMethod::Lm,
        date: date_from_gradients(estimate, &gradients, &fit.covariance, fit.residual_variance),
        coefficient_se: (0..fit.beta.len())
            .map(|j| fit.covariance[(j, j)].sqrt())
            .collect(),
        coefficients: fit.beta,
        residual_variance: fit.residual_variance,
    })
}

/// As [`fit_lm`] with the lagged outcome added; the effect path iterates the
/// fitted recursion.
pub fn fit_lm_ar1(panel: &SeriesPanel) -> Result<BaselineFit, BaselineError> {
    let unit = target_unit(panel);
    let design = build_design(panel, unit);
    let big_t = panel.horizon();
    if big_t + 1 < 6 {
        return Err(BaselineError::TooFewObservations {
            needed: 6,
            got: big_t + 1,
        });
    }
    let x = DMatrix::from_fn(big_t, 5, |i, j| {
        let t = i + 1;
        let row = design.regressor_row(t);
        match j {
            0 => 1.0,
            1 => row[0],
            2 => row[1],
            3 => row[2],
            _ => row[3],
        }
    });
    let y = DVector::from_fn(big_t, |i, _| unit.path[i + 1]);
    let fit = ols(&x, &y)?;
    let (theta, b_spot, b_pers, b_trend) = (fit.beta[1], fit.beta[2], fit.beta[3], fit.beta[4]);

    // Difference of the treated and control recursions; the intercept
    // cancels. Effect and its coefficient gradients share the recursion
    // d_t = theta * d_{t-1} + indicators.
    let horizons = panel.n_horizons();
    let mut estimate = Vec::with_capacity(horizons);
    let mut gradients = Vec::with_capacity(horizons);
    let (mut d, mut dd_theta, mut dd_spot, mut dd_pers, mut dd_trend) =
        (0.0, 0.0, 0.0, 0.0, 0.0);
    for h in 0..horizons {
        let t = panel.t_c() + h;
        let (spot, pers, trend) = design.indicators_at(t);
        dd_theta = d + theta * dd_theta;
        dd_spot = spot + theta * dd_spot;
        dd_pers = pers + theta * dd_pers;
        dd_trend = trend + theta * dd_trend;
        d = theta * d + b_spot * spot + b_pers * pers + b_trend * trend;
        estimate.push(d);
        gradients.push(DVector::from_vec(vec![
            0.0, dd_theta, dd_spot, dd_pers, dd_trend,
        ]));
    }
    Ok(BaselineFit {
        method: BaselineMethod::LmAr1,
        date: date_from_gradients(estimate, &gradients, &fit.covariance, 0.0),
        coefficient_se: (0..fit.beta.len())
            .map(|j| fit.covariance[(j, j)].sqrt())
            .collect(),
        coefficients: fit.beta,
        residual_variance: fit.residual_variance,
    })
}

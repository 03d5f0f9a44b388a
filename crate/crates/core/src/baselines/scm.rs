//! Synthetic control: a convex combination of control series matched to the
//! treated series over the pre-treatment window.
//!
//! Weights solve the simplex-constrained least squares problem
//!
//! ```text
//! min_w ||y_pre - A w||^2   s.t.  w >= 0,  sum w = 1
//! ```
//!
//! by an active-set method on the KKT system. Pointwise intervals come from
//! in-space placebo permutations: each control is refitted as a
//! pseudo-treated unit against the remaining controls, and the quantiles of
//! the placebo gaps at each horizon widen the treated gap.

use nalgebra::{DMatrix, DVector};

use super::{BaselineError, BaselineFit, BaselineMethod};
use crate::date::DatePath;
use crate::panel::SeriesPanel;
use crate::stats::quantile_sorted;

const KKT_TOL: f64 = 1e-8;

/// Minimizes `||b - A w||^2` over the probability simplex.
///
/// Active-set iteration: solve the equality-constrained system on the free
/// coordinates, step toward the solution until a coordinate hits zero, and
/// stop when every zero coordinate has a nonnegative KKT multiplier.
pub fn simplex_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<f64>, BaselineError> {
    let k = a.ncols();
    if k == 0 {
        return Err(BaselineError::InfeasibleFit);
    }
    let q = a.transpose() * a;
    let c = -(a.transpose() * b);

    let mut w = DVector::from_element(k, 1.0 / k as f64);
    let mut active = vec![false; k];

    for _ in 0..(4 * k * k + 64) {
        // Solve min 1/2 u'Qu + c'u s.t. sum u = 1, u_j = 0 on the active set,
        // via the bordered KKT system on the free coordinates.
        let free: Vec<usize> = (0..k).filter(|&j| !active[j]).collect();
        let m = free.len();
        let mut kkt = DMatrix::zeros(m + 1, m + 1);
        let mut rhs = DVector::zeros(m + 1);
        for (i, &fi) in free.iter().enumerate() {
            for (j, &fj) in free.iter().enumerate() {
                kkt[(i, j)] = q[(fi, fj)];
            }
            // Ridge for controls that are exactly collinear pre-treatment.
            kkt[(i, i)] += 1e-12 * (1.0 + q[(fi, fi)].abs());
            kkt[(i, m)] = 1.0;
            kkt[(m, i)] = 1.0;
            rhs[i] = -c[fi];
        }
        rhs[m] = 1.0;
        let solution = kkt
            .lu()
            .solve(&rhs)
            .ok_or(BaselineError::InfeasibleFit)?;
        let mut target = DVector::zeros(k);
        for (i, &fi) in free.iter().enumerate() {
            target[fi] = solution[i];
        }

        if target.iter().all(|&v| v >= -KKT_TOL) {
            // Feasible stationary point on the working set; check the
            // multipliers of the active bounds.
            let lambda = solution[m];
            let grad = &q * &target + &c;
            let mut worst = None;
            let mut worst_value = -KKT_TOL;
            for j in 0..k {
                if active[j] {
                    let mu = grad[j] + lambda;
                    if mu < worst_value {
                        worst_value = mu;
                        worst = Some(j);
                    }
                }
            }
            match worst {
                Some(j) => {
                    active[j] = false;
                    w = target;
                }
                None => {
                    let mut out = target.map(|v| v.max(0.0));
                    let total: f64 = out.iter().sum();
                    out /= total;
                    return Ok(out.as_slice().to_vec());
                }
            }
        } else {
            // Step from w toward the target until the first coordinate hits
            // zero; clamp that coordinate into the active set.
            let mut alpha = 1.0;
            let mut blocking = None;
            for j in 0..k {
                if !active[j] && target[j] < -KKT_TOL && w[j] > target[j] {
                    let step = w[j] / (w[j] - target[j]);
                    if step < alpha {
                        alpha = step;
                        blocking = Some(j);
                    }
                }
            }
            w = &w + (&target - &w) * alpha;
            if let Some(j) = blocking {
                w[j] = 0.0;
                active[j] = true;
            }
        }
    }
    Err(BaselineError::NonConvergence(4 * k * k + 64))
}

fn synthetic_path(controls: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let n = controls[0].len();
    (0..n)
        .map(|t| {
            controls
                .iter()
                .zip(weights)
                .map(|(c, &w)| w * c[t])
                .sum()
        })
        .collect()
}

fn fit_weights(
    treated: &[f64],
    controls: &[&[f64]],
    t_c: usize,
) -> Result<Vec<f64>, BaselineError> {
    let a = DMatrix::from_fn(t_c, controls.len(), |t, j| controls[j][t]);
    let b = DVector::from_fn(t_c, |t, _| treated[t]);
    simplex_least_squares(&a, &b)
}

/// Synthetic control for a one-treated/many-controls panel.
///
/// `coefficients` holds the simplex weights over the control units in panel
/// order.
pub fn fit_scm(panel: &SeriesPanel) -> Result<BaselineFit, BaselineError> {
    fit_scm_detailed(panel).map(|(fit, _)| fit)
}

/// As [`fit_scm`], also returning the in-space placebo gap paths (one row
/// per refitted control) that the interval quantiles are built from.
pub fn fit_scm_detailed(
    panel: &SeriesPanel,
) -> Result<(BaselineFit, Vec<Vec<f64>>), BaselineError> {
    if panel.n_treated() != 1 {
        return Err(BaselineError::WrongScenario {
            method: "synthetic control",
            expected: "one-treated / many-control",
        });
    }
    let controls: Vec<&[f64]> = panel.control_units().map(|u| u.path.as_slice()).collect();
    if controls.len() < 2 {
        return Err(BaselineError::InfeasibleFit);
    }
    let treated = &panel.first_treated().unwrap().path;
    let t_c = panel.t_c();
    let weights = fit_weights(treated, &controls, t_c)?;
    let synthetic = synthetic_path(&controls, &weights);

    let horizons = panel.n_horizons();
    let estimate: Vec<f64> = (0..horizons)
        .map(|h| treated[t_c + h] - synthetic[t_c + h])
        .collect();

    // In-space placebos: refit each control against the remaining controls.
    let mut gaps: Vec<Vec<f64>> = Vec::with_capacity(controls.len());
    for j in 0..controls.len() {
        let pseudo = controls[j];
        let rest: Vec<&[f64]> = controls
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, c)| *c)
            .collect();
        if rest.len() < 2 {
            continue;
        }
        if let Ok(w) = fit_weights(pseudo, &rest, t_c) {
            let synth = synthetic_path(&rest, &w);
            gaps.push(
                (0..horizons)
                    .map(|h| pseudo[t_c + h] - synth[t_c + h])
                    .collect(),
            );
        }
    }
    let mut pre_matching_error = 0.0;
    for t in 0..t_c {
        let d = treated[t] - synthetic[t];
        pre_matching_error += d * d;
    }

    let date = if gaps.len() >= 2 {
        let mut lower = Vec::with_capacity(horizons);
        let mut upper = Vec::with_capacity(horizons);
        let mut column = vec![0.0; gaps.len()];
        for h in 0..horizons {
            for (i, gap) in gaps.iter().enumerate() {
                column[i] = gap[h];
            }
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lower.push(estimate[h] + quantile_sorted(&column, 0.025).min(0.0));
            upper.push(estimate[h] + quantile_sorted(&column, 0.975).max(0.0));
        }
        DatePath::with_band(estimate, lower, upper, 0.95).expect("placebo band is ordered")
    } else {
        DatePath::point(estimate)
    };

    Ok((
        BaselineFit {
            method: BaselineMethod::Scm,
            coefficients: weights,
            coefficient_se: vec![],
            residual_variance: pre_matching_error / t_c as f64,
            date,
        },
        gaps,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::UnitSeries;

    fn wave(n: usize, phase: f64, scale: f64) -> Vec<f64> {
        (0..n).map(|t| scale * (t as f64 * 0.31 + phase).sin()).collect()
    }

    fn panel_from(treated: Vec<f64>, controls: Vec<Vec<f64>>, t_c: usize) -> SeriesPanel {
        let horizon = treated.len() - 1;
        let mut units = vec![UnitSeries::new(treated, true)];
        units.extend(controls.into_iter().map(|c| UnitSeries::new(c, false)));
        SeriesPanel::new(units, t_c, horizon).unwrap()
    }

    #[test]
    fn exact_match_concentrates_weight() {
        let n = 30;
        let c1 = wave(n, 0.0, 1.0);
        let c2 = wave(n, 1.3, 0.8);
        let c3 = wave(n, 2.1, 1.1);
        let panel = panel_from(c3.clone(), vec![c1, c2, c3], 20);
        let fit = fit_scm(&panel).unwrap();
        assert!((fit.coefficients[2] - 1.0).abs() < 1e-6);
        for &e in &fit.date.estimate {
            assert!(e.abs() < 1e-8);
        }
    }

    #[test]
    fn equal_mixture_is_recovered() {
        let n = 30;
        let c1 = wave(n, 0.0, 1.0);
        let c2 = wave(n, 1.3, 0.8);
        let treated: Vec<f64> = (0..n).map(|t| 0.5 * c1[t] + 0.5 * c2[t]).collect();
        let panel = panel_from(treated, vec![c1, c2, wave(n, 0.7, 0.5)], 20);
        let fit = fit_scm(&panel).unwrap();
        assert!((fit.coefficients[0] - 0.5).abs() < 1e-6);
        assert!((fit.coefficients[1] - 0.5).abs() < 1e-6);
        assert!(fit.coefficients[2].abs() < 1e-6);
    }

    #[test]
    fn weights_stay_on_the_simplex() {
        let n = 40;
        let controls: Vec<Vec<f64>> = (0..6).map(|j| wave(n, j as f64, 1.0 + 0.1 * j as f64)).collect();
        let treated = wave(n, 9.9, 2.5);
        let panel = panel_from(treated, controls, 25);
        let fit = fit_scm(&panel).unwrap();
        let total: f64 = fit.coefficients.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(fit.coefficients.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn too_few_controls_is_infeasible() {
        let n = 20;
        let panel = panel_from(wave(n, 0.0, 1.0), vec![wave(n, 1.0, 1.0)], 10);
        assert_eq!(fit_scm(&panel).unwrap_err(), BaselineError::InfeasibleFit);
    }
}

//! ARIMA(1,1,1) with the intervention indicators as regressors.
//!
//! The series and the indicator columns are differenced once; the regression
//! error follows an ARMA(1,1) whose conditional sum of squares is minimized
//! by BFGS with numerically differenced gradients. AR and MA roots are kept
//! outside the unit circle by a tanh transformation of the raw parameters.
//!
//! Because differencing telescopes, the treated-minus-control contrast in
//! levels is the indicator combination itself, so the effect path and its
//! delta-method intervals involve only the regression coefficients.

use nalgebra::{DMatrix, DVector};

use super::lm::target_unit;
use super::{BaselineError, BaselineFit, BaselineMethod};
use crate::date::DatePath;
use crate::design::build_design;
use crate::panel::SeriesPanel;
use crate::stats::z_for_level;

const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 500;

/// Conditional sum of squares of the ARMA(1,1) regression residuals.
///
/// `u_0` and `e_0` are conditioned to zero.
fn css(dy: &[f64], dx: &[Vec<f64>], phi: f64, theta: f64, beta: &[f64]) -> f64 {
    let mut u_prev = 0.0;
    let mut e_prev = 0.0;
    let mut total = 0.0;
    for t in 0..dy.len() {
        let mut u = dy[t];
        for (j, col) in dx.iter().enumerate() {
            u -= beta[j] * col[t];
        }
        let e = u - phi * u_prev - theta * e_prev;
        total += e * e;
        u_prev = u;
        e_prev = e;
    }
    total
}

/// Residuals and their Jacobian with respect to the raw parameters
/// `(phi_raw, theta_raw, beta...)`, differentiating the residual recursion
/// and chaining through the tanh transform.
fn css_residuals_jacobian(
    dy: &[f64],
    dx: &[Vec<f64>],
    raw: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let phi = raw[0].tanh();
    let theta = raw[1].tanh();
    let beta = &raw[2..];
    let k = dx.len();
    let n = dy.len();

    let mut residuals = DVector::zeros(n);
    let mut jacobian = DMatrix::zeros(n, raw.len());
    let mut u_prev = 0.0;
    let mut e_prev = 0.0;
    let mut de_phi_prev = 0.0;
    let mut de_theta_prev = 0.0;
    let mut de_beta_prev = vec![0.0; k];
    let mut du_beta_prev = vec![0.0; k];

    for t in 0..n {
        let mut u = dy[t];
        for (j, col) in dx.iter().enumerate() {
            u -= beta[j] * col[t];
        }
        let e = u - phi * u_prev - theta * e_prev;
        residuals[t] = e;

        let de_phi = -u_prev - theta * de_phi_prev;
        let de_theta = -e_prev - theta * de_theta_prev;
        jacobian[(t, 0)] = de_phi * (1.0 - phi * phi);
        jacobian[(t, 1)] = de_theta * (1.0 - theta * theta);
        for j in 0..k {
            let du = -dx[j][t];
            let de = du - phi * du_beta_prev[j] - theta * de_beta_prev[j];
            jacobian[(t, 2 + j)] = de;
            du_beta_prev[j] = du;
            de_beta_prev[j] = de;
        }
        de_phi_prev = de_phi;
        de_theta_prev = de_theta;
        u_prev = u;
        e_prev = e;
    }
    (residuals, jacobian)
}

/// Exact gradient of [`css`] with respect to the raw parameters.
fn css_gradient(dy: &[f64], dx: &[Vec<f64>], raw: &[f64]) -> Vec<f64> {
    let (residuals, jacobian) = css_residuals_jacobian(dy, dx, raw);
    let g = jacobian.transpose() * residuals * 2.0;
    g.as_slice().to_vec()
}

/// BFGS with backtracking line search, followed by a damped-Newton polish
/// when BFGS stalls above tolerance (the tanh boundary makes the raw-space
/// Hessian ill-conditioned, which quasi-Newton curvature tracks poorly).
/// Converged when the gradient max-norm falls below `GRAD_TOL`.
fn quasi_newton<F, G>(f: &F, grad_f: &G, x0: Vec<f64>) -> Result<Vec<f64>, BaselineError>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let k = x0.len();
    let mut x = DVector::from_vec(x0);
    let mut fx = f(x.as_slice());
    let mut grad = DVector::from_vec(grad_f(x.as_slice()));
    let mut h_inv = DMatrix::<f64>::identity(k, k);
    let mut iterations = 0usize;

    while iterations < MAX_ITER {
        iterations += 1;
        if grad.amax() < GRAD_TOL {
            return Ok(x.as_slice().to_vec());
        }
        let mut direction = -(&h_inv * &grad);
        if direction.dot(&grad) >= 0.0 {
            // Reset a corrupted curvature estimate.
            h_inv = DMatrix::identity(k, k);
            direction = -grad.clone();
        }
        let mut alpha = 1.0;
        let slope = grad.dot(&direction);
        let mut accepted = false;
        for _ in 0..60 {
            let candidate = &x + &direction * alpha;
            let fc = f(candidate.as_slice());
            if fc <= fx + 1e-4 * alpha * slope {
                let grad_new = DVector::from_vec(grad_f(candidate.as_slice()));
                let s = &candidate - &x;
                let y = &grad_new - &grad;
                let sy = s.dot(&y);
                if sy > 1e-12 * s.norm() * y.norm() {
                    let rho = 1.0 / sy;
                    let identity = DMatrix::<f64>::identity(k, k);
                    let left = &identity - &s * y.transpose() * rho;
                    let right = &identity - &y * s.transpose() * rho;
                    h_inv = &left * h_inv * right + &s * s.transpose() * rho;
                }
                let progress = (fx - fc).abs() <= 1e-15 * fx.abs().max(1.0);
                x = candidate;
                fx = fc;
                grad = grad_new;
                accepted = true;
                if progress {
                    // No measurable descent left for BFGS.
                    iterations = MAX_ITER;
                }
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    // Damped-Newton polish from the BFGS incumbent. The Hessian is the
    // finite-difference Jacobian of the analytic gradient, which keeps its
    // noise far below the gradient tolerance.
    let mut lambda = 1e-10;
    for _ in 0..60 {
        if grad.amax() < GRAD_TOL {
            return Ok(x.as_slice().to_vec());
        }
        let hessian = gradient_jacobian(grad_f, x.as_slice());
        let scale = (0..k)
            .map(|i| hessian[(i, i)].abs())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let mut improved = false;
        for _ in 0..40 {
            let mut damped = hessian.clone();
            for i in 0..k {
                damped[(i, i)] += lambda * scale;
            }
            if let Some(chol) = damped.cholesky() {
                let step = chol.solve(&(-&grad));
                let candidate = &x + step;
                let fc = f(candidate.as_slice());
                let grad_candidate = DVector::from_vec(grad_f(candidate.as_slice()));
                // Accept on descent of f or of the gradient norm.
                if fc < fx || grad_candidate.amax() < grad.amax() {
                    x = candidate;
                    fx = fc;
                    grad = grad_candidate;
                    lambda = (lambda / 5.0).max(1e-12);
                    improved = true;
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    if grad.amax() < GRAD_TOL {
        Ok(x.as_slice().to_vec())
    } else {
        Err(BaselineError::NonConvergence(MAX_ITER))
    }
}

/// Symmetrized finite-difference Jacobian of an analytic gradient.
fn gradient_jacobian<G: Fn(&[f64]) -> Vec<f64>>(grad_f: &G, x: &[f64]) -> DMatrix<f64> {
    let k = x.len();
    let mut h = DMatrix::zeros(k, k);
    let mut probe = x.to_vec();
    for j in 0..k {
        let step = 1e-6 * x[j].abs().max(1.0);
        probe[j] = x[j] + step;
        let up = grad_f(&probe);
        probe[j] = x[j] - step;
        let down = grad_f(&probe);
        probe[j] = x[j];
        for i in 0..k {
            h[(i, j)] = (up[i] - down[i]) / (2.0 * step);
        }
    }
    let ht = h.transpose();
    (h + ht) * 0.5
}

/// Fits the ARIMAX(1,1,1) baseline to the treated series.
///
/// `coefficients` are `[phi, theta, b_spot, b_persistent, b_trend]`.
pub fn fit_arimax(panel: &SeriesPanel) -> Result<BaselineFit, BaselineError> {
    let unit = target_unit(panel);
    let design = build_design(panel, unit);
    let big_t = panel.horizon();
    if big_t + 1 < 10 {
        return Err(BaselineError::TooFewObservations {
            needed: 10,
            got: big_t + 1,
        });
    }

    // First differences of the series and of the indicator columns.
    let dy: Vec<f64> = (1..=big_t)
        .map(|t| unit.path[t] - unit.path[t - 1])
        .collect();
    let dy_mean = dy.iter().sum::<f64>() / dy.len() as f64;
    let dy_var = dy.iter().map(|v| (v - dy_mean) * (v - dy_mean)).sum::<f64>();
    if dy_var < 1e-14 {
        return Err(BaselineError::DegenerateVariance);
    }
    let indicator = |t: usize| {
        [
            design.spot_at(t),
            design.persistent_at(t),
            design.trend_at(t),
        ]
    };
    let dx_all: Vec<Vec<f64>> = (0..3)
        .map(|j| {
            (1..=big_t)
                .map(|t| indicator(t)[j] - indicator(t - 1)[j])
                .collect()
        })
        .collect();
    // Structurally zero columns (control units) are excluded from the fit.
    let keep: Vec<usize> = (0..3)
        .filter(|&j| dx_all[j].iter().any(|&v| v != 0.0))
        .collect();
    let dx: Vec<Vec<f64>> = keep.iter().map(|&j| dx_all[j].clone()).collect();
    let n_beta = dx.len();

    // Starting values: OLS for the regression block, the residual lag-1
    // autocorrelation for the AR part.
    let beta0 = if n_beta > 0 {
        let x = DMatrix::from_fn(dy.len(), n_beta, |i, j| dx[j][i]);
        let y = DVector::from_vec(dy.clone());
        let xtx = x.transpose() * &x;
        let xty = x.transpose() * &y;
        match xtx.cholesky() {
            Some(chol) => chol.solve(&xty).as_slice().to_vec(),
            None => return Err(BaselineError::RankDeficient),
        }
    } else {
        vec![]
    };
    let resid: Vec<f64> = (0..dy.len())
        .map(|t| {
            let mut u = dy[t];
            for (j, col) in dx.iter().enumerate() {
                u -= beta0[j] * col[t];
            }
            u
        })
        .collect();
    let r_var: f64 = resid.iter().map(|v| v * v).sum();
    let r_cov: f64 = resid.windows(2).map(|w| w[0] * w[1]).sum();
    let phi0 = if r_var > 0.0 {
        (r_cov / r_var).clamp(-0.9, 0.9)
    } else {
        0.0
    };

    let objective = |raw: &[f64]| {
        let phi = raw[0].tanh();
        let theta = raw[1].tanh();
        css(&dy, &dx, phi, theta, &raw[2..])
    };
    let gradient = |raw: &[f64]| css_gradient(&dy, &dx, raw);
    let mut x0 = vec![phi0.atanh(), 0.0];
    x0.extend_from_slice(&beta0);
    let raw = quasi_newton(&objective, &gradient, x0)?;

    let n_params = 2 + n_beta;
    let sigma2 = objective(&raw) / (dy.len().saturating_sub(n_params)).max(1) as f64;
    // Nonlinear least squares covariance, sigma2 * (J'J)^{-1}.
    let (_, jacobian) = css_residuals_jacobian(&dy, &dx, &raw);
    let jtj = jacobian.transpose() * &jacobian;
    let covariance = match jtj.clone().cholesky() {
        Some(chol) => chol.inverse() * sigma2,
        None => jtj
            .pseudo_inverse(1e-12)
            .map(|p| p * sigma2)
            .unwrap_or_else(|_| DMatrix::zeros(n_params, n_params)),
    };

    // Structural coefficients and their standard errors (chain rule on the
    // tanh transform for the ARMA pair).
    let phi = raw[0].tanh();
    let theta = raw[1].tanh();
    let mut coefficients = vec![phi, theta, 0.0, 0.0, 0.0];
    let mut coefficient_se = vec![
        covariance[(0, 0)].max(0.0).sqrt() * (1.0 - phi * phi),
        covariance[(1, 1)].max(0.0).sqrt() * (1.0 - theta * theta),
        0.0,
        0.0,
        0.0,
    ];
    for (slot, &j) in keep.iter().enumerate() {
        coefficients[2 + j] = raw[2 + slot];
        coefficient_se[2 + j] = covariance[(2 + slot, 2 + slot)].max(0.0).sqrt();
    }

    // Level contrast telescopes to the indicator combination.
    let horizons = panel.n_horizons();
    let z = z_for_level(0.95);
    let mut estimate = Vec::with_capacity(horizons);
    let mut lower = Vec::with_capacity(horizons);
    let mut upper = Vec::with_capacity(horizons);
    for h in 0..horizons {
        let t = panel.t_c() + h;
        let g_full = indicator(t);
        let value: f64 = (0..3).map(|j| coefficients[2 + j] * g_full[j]).sum();
        let mut var = 0.0;
        for (a, &ja) in keep.iter().enumerate() {
            for (b, &jb) in keep.iter().enumerate() {
                var += g_full[ja] * g_full[jb] * covariance[(2 + a, 2 + b)];
            }
        }
        let half = z * var.max(0.0).sqrt();
        estimate.push(value);
        lower.push(value - half);
        upper.push(value + half);
    }
    Ok(BaselineFit {
        method: BaselineMethod::Arimax,
        date: DatePath::with_band(estimate, lower, upper, 0.95)
            .expect("normal band is ordered"),
        coefficients,
        coefficient_se,
        residual_variance: sigma2,
    })
}

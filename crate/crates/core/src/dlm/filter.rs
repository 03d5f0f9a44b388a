//! Forward filtering with discount state evolution and discount stochastic
//! volatility.
//!
//! The state prior at `t` inflates the previous posterior,
//! `R_t = G C_{t-1} G' / delta`, in lieu of an explicit evolution variance.
//! With learned observation variance the one-step forecast is Student-t with
//! discounted degrees of freedom `beta_v * n_{t-1}`; with fixed variance the
//! recursions reduce to a plain Kalman filter and the forecast is Gaussian.

use nalgebra::{DMatrix, DVector};

use super::{symmetrize, DlmError, DlmSpec, ObsVariance};
use crate::design::InterventionDesign;
use crate::stats::{normal_logpdf, student_t_logpdf};

/// Per-time prior and posterior moments from a filter pass.
///
/// Posterior arrays are indexed `0 ..= T` (entry 0 holds the prior);
/// predictive arrays are indexed by `t - 1` for observation times
/// `t = 1 ..= T`.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub prior_mean: Vec<DVector<f64>>,
    pub prior_cov: Vec<DMatrix<f64>>,
    pub post_mean: Vec<DVector<f64>>,
    pub post_cov: Vec<DMatrix<f64>>,
    /// Degrees of freedom `n_t`; constant under fixed variance.
    pub df: Vec<f64>,
    /// Variance point estimates `s_t`; the fixed variance when known.
    pub scale: Vec<f64>,
    pub forecast_mean: Vec<f64>,
    pub forecast_var: Vec<f64>,
    /// Accumulated one-step-ahead log predictive density.
    pub log_predictive: f64,
}

impl Filtered {
    pub fn len(&self) -> usize {
        self.prior_mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prior_mean.is_empty()
    }

    /// Implied evolution variance `W_t = R_t - G C_{t-1} G'`.
    pub fn evolution_var(&self, spec: &DlmSpec, t: usize) -> DMatrix<f64> {
        let g = spec.evolution_matrix();
        let mut w = self.prior_cov[t - 1].clone() - &g * &self.post_cov[t - 1] * g.transpose();
        symmetrize(&mut w);
        w
    }
}

/// Runs the filter over explicit observation targets and regressor rows.
pub fn filter_regressors(
    targets: &[f64],
    rows: &[DVector<f64>],
    spec: &DlmSpec,
) -> Result<Filtered, DlmError> {
    spec.validate()?;
    if targets.len() != rows.len() {
        return Err(DlmError::LengthMismatch {
            got: targets.len(),
            expected: rows.len(),
        });
    }
    let dim = spec.state_dim();
    for row in rows {
        if row.len() != dim {
            return Err(DlmError::InvalidSpec("regressor row has wrong dimension"));
        }
    }
    let horizon = targets.len();
    let g = spec.evolution_matrix();
    let delta = spec.discount_state;
    let beta_v = spec.discount_vol;

    let mut m = spec.prior_mean.clone();
    let mut c = spec.prior_scale.clone();
    let (mut n, mut s) = match spec.variance {
        ObsVariance::Fixed(v) => (f64::INFINITY, v),
        ObsVariance::Learned => (spec.n0, spec.s0),
    };

    let mut out = Filtered {
        prior_mean: Vec::with_capacity(horizon),
        prior_cov: Vec::with_capacity(horizon),
        post_mean: Vec::with_capacity(horizon + 1),
        post_cov: Vec::with_capacity(horizon + 1),
        df: Vec::with_capacity(horizon + 1),
        scale: Vec::with_capacity(horizon + 1),
        forecast_mean: Vec::with_capacity(horizon),
        forecast_var: Vec::with_capacity(horizon),
        log_predictive: 0.0,
    };
    out.post_mean.push(m.clone());
    out.post_cov.push(c.clone());
    out.df.push(n);
    out.scale.push(s);

    for t in 1..=horizon {
        let f_t = &rows[t - 1];
        let a = &g * &m;
        let mut r = (&g * &c * g.transpose()) / delta;
        symmetrize(&mut r);

        let forecast = f_t.dot(&a);
        let rf = &r * f_t;
        let q = f_t.dot(&rf) + s;
        if !(q > 0.0 && q.is_finite()) {
            return Err(DlmError::NumericalBreakdown { t });
        }
        let err = targets[t - 1] - forecast;
        let gain = &rf / q;

        match spec.variance {
            ObsVariance::Fixed(_) => {
                out.log_predictive += normal_logpdf(err, 0.0, q);
                m = &a + &gain * err;
                c = &r - &gain * rf.transpose();
            }
            ObsVariance::Learned => {
                let n_pred = beta_v * n;
                out.log_predictive += student_t_logpdf(err, n_pred, 0.0, q);
                let n_new = n_pred + 1.0;
                let s_new = s * (n_pred + err * err / q) / n_new;
                m = &a + &gain * err;
                c = (&r - &gain * rf.transpose()) * (s_new / s);
                n = n_new;
                s = s_new;
            }
        }
        symmetrize(&mut c);
        if !c.iter().all(|v| v.is_finite()) || (0..dim).any(|i| c[(i, i)] < -1e-10) {
            return Err(DlmError::NumericalBreakdown { t });
        }

        out.prior_mean.push(a);
        out.prior_cov.push(r);
        out.post_mean.push(m.clone());
        out.post_cov.push(c.clone());
        out.df.push(n);
        out.scale.push(s);
        out.forecast_mean.push(forecast);
        out.forecast_var.push(q);
    }
    Ok(out)
}

/// Filters an observed series against its intervention design.
///
/// `y` holds the observations `y_1 ..= y_T`; the design supplies the lags.
pub fn forward_filter(
    y: &[f64],
    design: &InterventionDesign,
    spec: &DlmSpec,
) -> Result<Filtered, DlmError> {
    let (targets, rows) = spec.observation_rows(y, design)?;
    filter_regressors(&targets, &rows, spec)
}

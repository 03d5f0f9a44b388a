//! Dynamic linear model estimation of the effect path.
//!
//! A single DLM with discount stochastic volatility is fitted to the full
//! observed series, with the intervention encoded through the design rows
//! from `t_c` onward. Posterior state paths are drawn by forward filtering
//! backward sampling; at the intervention the model is branched into a
//! treated and a control regime whose per-draw difference is the effect
//! path.

mod branch;
mod filter;
mod grid;
mod sample;

pub use branch::{
    branch_counterfactual, component_draws, decompose_effects, effect_draws, fit_treated_series,
    DlmFit, DlmOptions, EffectDecomposition,
};
pub use filter::{filter_regressors, forward_filter, Filtered};
pub use grid::{default_discount_grid, grid_search_discounts};
pub use sample::{backward_sample, smooth_moments, DlmPosterior, StateDraw};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::design::InterventionDesign;

#[derive(Debug, Error, PartialEq)]
pub enum DlmError {
    #[error("scale matrix lost positive definiteness at t = {t}; the state discount is too small for the data")]
    NumericalBreakdown { t: usize },
    #[error("series length {got} does not match design length {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("discount grid is empty")]
    EmptyGrid,
    #[error("invalid specification: {0}")]
    InvalidSpec(&'static str),
}

/// How the observation equation treats the lagged outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationForm {
    /// `y_t = F_t' theta_t + e_t` with `F_t = (y_{t-1}, 1, spot, persistent,
    /// trend)`: the autoregression is carried by the time-varying
    /// coefficient on the lagged outcome, with the drift in a separate
    /// intercept so the lag coefficient identifies the mean reversion.
    /// State dimension 5.
    LagCoefficient,
    /// `y_t = y_{t-1} + F_t' theta_t + e_t` with `F_t = (1, y_{t-1}, spot,
    /// persistent, trend)`. State dimension 5.
    LiteralIncrement,
}

/// How counterfactual trajectories are propagated past `t_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContrastMode {
    /// Propagate the state from its posterior draw at `t_c` under the
    /// evolution model, then contrast treated and control outcome
    /// recursions.
    SimulateForward,
    /// Contrast using the smoothed in-sample state draws.
    SmoothedStates,
}

/// Observation variance treatment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObsVariance {
    /// Known constant variance; the filter is a plain Kalman recursion.
    Fixed(f64),
    /// Conjugate normal/inverse-gamma learning with discount factor
    /// `discount_vol`.
    Learned,
}

/// Model specification: priors, discounts and structural choices.
///
/// The state prior is `theta_0 | v ~ N(prior_mean, (v / s0) * prior_scale)`
/// with `1/v ~ Gamma(n0 / 2, n0 * s0 / 2)`; for [`ObsVariance::Fixed`] the
/// prior covariance is `prior_scale` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DlmSpec {
    pub form: ObservationForm,
    pub contrast: ContrastMode,
    pub variance: ObsVariance,
    /// State evolution matrix `G`; `None` means identity.
    pub evolution: Option<DMatrix<f64>>,
    pub prior_mean: DVector<f64>,
    pub prior_scale: DMatrix<f64>,
    pub n0: f64,
    pub s0: f64,
    /// State discount `delta`, in (0, 1].
    pub discount_state: f64,
    /// Volatility discount `beta_v`, in (0, 1].
    pub discount_vol: f64,
}

impl DlmSpec {
    /// Intervention spec in the given observation form with the reference
    /// priors: `m0 = (0.95, 0, ...)`, `C0 = I`, `n0 = 20`, `s0 = 0.01`.
    pub fn intervention(form: ObservationForm) -> Self {
        let dim = 5;
        let mut m0 = DVector::zeros(dim);
        // The prior mass sits on the lag coefficient.
        let lag_index = match form {
            ObservationForm::LagCoefficient => 0,
            ObservationForm::LiteralIncrement => 1,
        };
        m0[lag_index] = 0.95;
        Self {
            form,
            contrast: ContrastMode::SimulateForward,
            variance: ObsVariance::Learned,
            evolution: None,
            prior_mean: m0,
            prior_scale: DMatrix::identity(dim, dim),
            n0: 20.0,
            s0: 0.01,
            discount_state: 0.99,
            discount_vol: 0.99,
        }
    }

    pub fn with_discounts(mut self, delta: f64, beta_v: f64) -> Self {
        self.discount_state = delta;
        self.discount_vol = beta_v;
        self
    }

    pub fn state_dim(&self) -> usize {
        self.prior_mean.len()
    }

    pub fn evolution_matrix(&self) -> DMatrix<f64> {
        match &self.evolution {
            Some(g) => g.clone(),
            None => DMatrix::identity(self.state_dim(), self.state_dim()),
        }
    }

    pub fn validate(&self) -> Result<(), DlmError> {
        if !(self.discount_state > 0.0 && self.discount_state <= 1.0) {
            return Err(DlmError::InvalidSpec("discount_state must be in (0, 1]"));
        }
        if !(self.discount_vol > 0.0 && self.discount_vol <= 1.0) {
            return Err(DlmError::InvalidSpec("discount_vol must be in (0, 1]"));
        }
        if !(self.n0 > 0.0 && self.s0 > 0.0) {
            return Err(DlmError::InvalidSpec("n0 and s0 must be positive"));
        }
        if self.prior_scale.nrows() != self.state_dim()
            || self.prior_scale.ncols() != self.state_dim()
        {
            return Err(DlmError::InvalidSpec("prior scale has wrong shape"));
        }
        if self.prior_scale.clone().cholesky().is_none() {
            return Err(DlmError::InvalidSpec("prior scale must be positive definite"));
        }
        if let Some(g) = &self.evolution {
            if g.nrows() != self.state_dim() || g.ncols() != self.state_dim() {
                return Err(DlmError::InvalidSpec("evolution matrix has wrong shape"));
            }
        }
        if let ObsVariance::Fixed(v) = self.variance {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DlmError::InvalidSpec("fixed variance must be positive"));
            }
        }
        Ok(())
    }

    /// Regressor rows and observation targets for a series under this form.
    ///
    /// `y` holds the observations `y_1 ..= y_T`; lags come from the design.
    pub(crate) fn observation_rows(
        &self,
        y: &[f64],
        design: &InterventionDesign,
    ) -> Result<(Vec<f64>, Vec<DVector<f64>>), DlmError> {
        let t_len = design.lagged_outcome.len();
        if y.len() != t_len {
            return Err(DlmError::LengthMismatch {
                got: y.len(),
                expected: t_len,
            });
        }
        let mut targets = Vec::with_capacity(t_len);
        let mut rows = Vec::with_capacity(t_len);
        for t in 1..=t_len {
            let [lag, spot, pers, trend] = design.regressor_row(t);
            match self.form {
                ObservationForm::LagCoefficient => {
                    targets.push(y[t - 1]);
                    rows.push(DVector::from_vec(vec![lag, 1.0, spot, pers, trend]));
                }
                ObservationForm::LiteralIncrement => {
                    targets.push(y[t - 1] - lag);
                    rows.push(DVector::from_vec(vec![1.0, lag, spot, pers, trend]));
                }
            }
        }
        Ok((targets, rows))
    }
}

/// Symmetrizes a covariance in place.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let transposed = m.transpose();
    *m += transposed;
    *m *= 0.5;
}

/// Cholesky factor with a small jitter fallback; `None` when the matrix is
/// zero relative to `reference` (the scale of the covariance it came from,
/// so that exact-limit cases like `delta = 1` collapse cleanly).
pub(crate) fn chol_or_zero(
    m: &DMatrix<f64>,
    reference: f64,
    t: usize,
) -> Result<Option<DMatrix<f64>>, DlmError> {
    let max_abs = m.amax();
    if max_abs <= 1e-12 * reference.max(1e-300) {
        return Ok(None);
    }
    let mut attempt = m.clone();
    let mut jitter = max_abs * 1e-10;
    for _ in 0..7 {
        if let Some(chol) = attempt.clone().cholesky() {
            return Ok(Some(chol.l()));
        }
        for i in 0..attempt.nrows() {
            attempt[(i, i)] += jitter;
        }
        jitter *= 100.0;
    }
    Err(DlmError::NumericalBreakdown { t })
}

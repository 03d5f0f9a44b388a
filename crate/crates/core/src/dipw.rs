//! Dynamic inverse-probability weighting.
//!
//! Propensities are fitted by logistic regression on summaries of the
//! pre-treatment history; the weighted estimators then contrast the mean
//! potential outcome paths. For each post-treatment time `t`, the
//! unnormalized estimators are
//!
//! ```text
//! mu1_t = (1/n) sum_i (Z_i / p_i) * Y_{t,i}
//! mu0_t = (1/n) sum_i ((1 - Z_i) / (1 - p_i)) * Y_{t,i}
//! ```
//!
//! and the stabilized (self-normalized) variant divides by the summed
//! weights instead of `n`. Pointwise standard errors come from the empirical
//! variance of the per-unit weighted terms.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::date::DatePath;
use crate::panel::SeriesPanel;
use crate::stats::z_for_level;

/// Propensities are clipped into `[CLIP, 1 - CLIP]` to guard divisions.
pub const CLIP: f64 = 1e-6;

const MAX_NEWTON_ITER: usize = 100;
const GRAD_TOL: f64 = 1e-8;
/// Total deviance below this is a collapse: the arms are separable.
const SEPARATION_DEVIANCE: f64 = 1e-4;

#[derive(Debug, Error, PartialEq)]
pub enum DipwError {
    #[error("panel must contain both treated and control units")]
    SingleArm,
    #[error("logistic deviance collapsed; the arms are perfectly separated")]
    PerfectSeparation,
    #[error("feature spec needs at least {needed} pre-treatment points, got {got}")]
    InsufficientHistory { needed: usize, got: usize },
    #[error("propensity fit covers {got} units, panel has {expected}")]
    UnitCountMismatch { got: usize, expected: usize },
    #[error("a stabilized weight sum is zero")]
    DegenerateWeights,
}

/// Pre-treatment summaries entering the propensity model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureSpec {
    /// Intercept only; the MLE is the treated share.
    InterceptOnly,
    /// Intercept and the last pre-treatment outcome `y_{t_c - 1}`.
    LastOutcome,
    /// Intercept, `y_{t_c - 1}`, mean of `y_0 .. y_{t_c - 1}`, and the last
    /// pre-treatment increment `y_{t_c - 1} - y_{t_c - 2}`.
    Summary,
}

impl FeatureSpec {
    pub fn describe(&self) -> &'static str {
        match self {
            FeatureSpec::InterceptOnly => "1",
            FeatureSpec::LastOutcome => "1 + y[t_c-1]",
            FeatureSpec::Summary => "1 + y[t_c-1] + mean(y[0..t_c]) + diff(y[t_c-1])",
        }
    }

    fn min_history(&self) -> usize {
        match self {
            FeatureSpec::InterceptOnly => 1,
            FeatureSpec::LastOutcome => 1,
            FeatureSpec::Summary => 2,
        }
    }

    fn row(&self, pre: &[f64]) -> Vec<f64> {
        let last = *pre.last().unwrap();
        match self {
            FeatureSpec::InterceptOnly => vec![1.0],
            FeatureSpec::LastOutcome => vec![1.0, last],
            FeatureSpec::Summary => {
                let mean = pre.iter().sum::<f64>() / pre.len() as f64;
                let diff = last - pre[pre.len() - 2];
                vec![1.0, last, mean, diff]
            }
        }
    }
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec::Summary
    }
}

/// A fitted propensity model.
#[derive(Debug, Clone)]
pub struct PropensityFit {
    /// Per-unit propensities, clipped into the open unit interval.
    pub p: Vec<f64>,
    pub feature_spec: String,
    pub coefficients: Vec<f64>,
    /// Standard errors from the inverse observed information.
    pub coefficient_se: Vec<f64>,
}

impl PropensityFit {
    /// Wraps externally known propensities (e.g. the randomization design).
    pub fn known(p: Vec<f64>) -> Self {
        let p = p
            .into_iter()
            .map(|v| v.clamp(CLIP, 1.0 - CLIP))
            .collect();
        Self {
            p,
            feature_spec: "known".to_string(),
            coefficients: vec![],
            coefficient_se: vec![],
        }
    }

    /// Constant propensity equal to the panel's treated share.
    pub fn from_treated_share(panel: &SeriesPanel) -> Result<Self, DipwError> {
        let n1 = panel.n_treated();
        if n1 == 0 || panel.n_control() == 0 {
            return Err(DipwError::SingleArm);
        }
        let share = n1 as f64 / panel.units().len() as f64;
        Ok(Self::known(vec![share; panel.units().len()]))
    }
}

/// Fits a logistic propensity model by Newton-Raphson.
///
/// Iterates until the gradient max-norm falls below `1e-8` or 100 iterations,
/// whichever comes first. Collapsing deviance is reported as
/// [`DipwError::PerfectSeparation`]; callers may fall back to known
/// propensities.
pub fn fit_propensity(panel: &SeriesPanel, spec: FeatureSpec) -> Result<PropensityFit, DipwError> {
    if panel.n_treated() == 0 || panel.n_control() == 0 {
        return Err(DipwError::SingleArm);
    }
    if panel.t_c() < spec.min_history() {
        return Err(DipwError::InsufficientHistory {
            needed: spec.min_history(),
            got: panel.t_c(),
        });
    }
    let n = panel.units().len();
    let rows: Vec<Vec<f64>> = panel
        .units()
        .iter()
        .map(|u| spec.row(&u.path[..panel.t_c()]))
        .collect();
    let k = rows[0].len();
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let z = DVector::from_fn(n, |i, _| {
        if panel.units()[i].treated {
            1.0
        } else {
            0.0
        }
    });

    let deviance_of = |eta: &DVector<f64>| -> f64 {
        (0..n)
            .map(|i| {
                let pi = (1.0 / (1.0 + (-eta[i]).exp())).clamp(1e-300, 1.0 - 1e-16);
                -2.0 * (z[i] * pi.ln() + (1.0 - z[i]) * (1.0 - pi).ln())
            })
            .sum()
    };
    let mut beta = DVector::zeros(k);
    let mut eta = &x * &beta;
    for _ in 0..MAX_NEWTON_ITER {
        let p = eta.map(|e| 1.0 / (1.0 + (-e).exp()));
        if deviance_of(&eta) < SEPARATION_DEVIANCE || !beta.iter().all(|b| b.is_finite()) {
            return Err(DipwError::PerfectSeparation);
        }
        let grad = x.transpose() * (&z - &p);
        if grad.amax() < GRAD_TOL {
            break;
        }
        let w = DMatrix::from_diagonal(&p.map(|pi| (pi * (1.0 - pi)).max(1e-12)));
        let info = x.transpose() * &w * &x;
        let step = match info.clone().cholesky() {
            Some(chol) => chol.solve(&grad),
            None => return Err(DipwError::PerfectSeparation),
        };
        beta += step;
        eta = &x * &beta;
    }

    if deviance_of(&eta) < SEPARATION_DEVIANCE {
        return Err(DipwError::PerfectSeparation);
    }
    let p_hat: Vec<f64> = eta
        .iter()
        .map(|&e| (1.0 / (1.0 + (-e).exp())).clamp(CLIP, 1.0 - CLIP))
        .collect();
    let w = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        p_hat.iter().map(|&pi| pi * (1.0 - pi)),
    ));
    let info = x.transpose() * &w * &x;
    let se = match info.try_inverse() {
        Some(cov) => (0..k).map(|j| cov[(j, j)].sqrt()).collect(),
        None => vec![f64::NAN; k],
    };
    Ok(PropensityFit {
        p: p_hat,
        feature_spec: spec.describe().to_string(),
        coefficients: beta.iter().copied().collect(),
        coefficient_se: se,
    })
}

/// Mean potential outcome estimates over `t = t_c ..= T`.
#[derive(Debug, Clone)]
pub struct DipwEstimate {
    pub mu1: Vec<f64>,
    pub mu0: Vec<f64>,
    /// `tau[h] = mu1[h] - mu0[h]`, exactly.
    pub tau: Vec<f64>,
    pub stabilized: bool,
    pub pointwise_se: Vec<f64>,
}

impl DipwEstimate {
    /// Normal-approximation interval path at the given level.
    pub fn to_date_path(&self, level: f64) -> DatePath {
        let z = z_for_level(level);
        let lower: Vec<f64> = self
            .tau
            .iter()
            .zip(&self.pointwise_se)
            .map(|(t, s)| t - z * s)
            .collect();
        let upper: Vec<f64> = self
            .tau
            .iter()
            .zip(&self.pointwise_se)
            .map(|(t, s)| t + z * s)
            .collect();
        DatePath::with_band(self.tau.clone(), lower, upper, level)
            .expect("normal band is ordered")
    }
}

/// Computes the DIPW estimate of the effect path.
pub fn dipw_estimate(
    panel: &SeriesPanel,
    prop: &PropensityFit,
    stabilized: bool,
) -> Result<DipwEstimate, DipwError> {
    let n = panel.units().len();
    if prop.p.len() != n {
        return Err(DipwError::UnitCountMismatch {
            got: prop.p.len(),
            expected: n,
        });
    }
    let w1: Vec<f64> = panel
        .units()
        .iter()
        .zip(&prop.p)
        .map(|(u, &p)| if u.treated { 1.0 / p } else { 0.0 })
        .collect();
    let w0: Vec<f64> = panel
        .units()
        .iter()
        .zip(&prop.p)
        .map(|(u, &p)| if u.treated { 0.0 } else { 1.0 / (1.0 - p) })
        .collect();
    let sum_w1: f64 = w1.iter().sum();
    let sum_w0: f64 = w0.iter().sum();
    if stabilized && (sum_w1 == 0.0 || sum_w0 == 0.0) {
        return Err(DipwError::DegenerateWeights);
    }
    if sum_w1 == 0.0 || sum_w0 == 0.0 {
        // An empty arm breaks the unnormalized estimator just the same.
        return Err(DipwError::DegenerateWeights);
    }

    let horizons = panel.n_horizons();
    let nf = n as f64;
    let mut mu1 = Vec::with_capacity(horizons);
    let mut mu0 = Vec::with_capacity(horizons);
    let mut tau = Vec::with_capacity(horizons);
    let mut se = Vec::with_capacity(horizons);
    for h in 0..horizons {
        let t = panel.t_c() + h;
        let y: Vec<f64> = panel.units().iter().map(|u| u.path[t]).collect();
        let (m1, m0): (f64, f64) = if stabilized {
            (
                (0..n).map(|i| w1[i] * y[i]).sum::<f64>() / sum_w1,
                (0..n).map(|i| w0[i] * y[i]).sum::<f64>() / sum_w0,
            )
        } else {
            (
                (0..n).map(|i| w1[i] * y[i]).sum::<f64>() / nf,
                (0..n).map(|i| w0[i] * y[i]).sum::<f64>() / nf,
            )
        };
        // Influence terms of the per-unit weighted contributions.
        let psi: Vec<f64> = if stabilized {
            (0..n)
                .map(|i| {
                    w1[i] * (y[i] - m1) / (sum_w1 / nf) - w0[i] * (y[i] - m0) / (sum_w0 / nf)
                })
                .collect()
        } else {
            let t_hat = m1 - m0;
            (0..n).map(|i| w1[i] * y[i] - w0[i] * y[i] - t_hat).collect()
        };
        let var = psi.iter().map(|v| v * v).sum::<f64>() / (nf - 1.0);
        mu1.push(m1);
        mu0.push(m0);
        tau.push(m1 - m0);
        se.push((var / nf).sqrt());
    }
    Ok(DipwEstimate {
        mu1,
        mu0,
        tau,
        stabilized,
        pointwise_se: se,
    })
}

/// Difference of arm-wise sample means with its normal standard error.
///
/// This is the stabilized DIPW estimator with a constant known propensity
/// equal to the treated share; under randomization it is the natural panel
/// mean contrast.
pub fn panel_mean(panel: &SeriesPanel) -> Result<DipwEstimate, DipwError> {
    let prop = PropensityFit::from_treated_share(panel)?;
    dipw_estimate(panel, &prop, true)
}

//! Comparison estimators: regression baselines fitted to the treated
//! series, observed-series differences, synthetic control, and
//! difference-in-differences. Each returns a [`BaselineFit`] holding the
//! method's effect path.

mod arimax;
mod did;
mod lm;
mod observed_y;
mod ols;
mod scm;

pub use arimax::fit_arimax;
pub use did::fit_did;
pub use lm::{fit_lm, fit_lm_ar1};
pub use observed_y::observed_y;
pub use scm::{fit_scm, fit_scm_detailed, simplex_least_squares};

use thiserror::Error;

use crate::date::DatePath;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("optimizer did not reach the gradient tolerance within {0} iterations")]
    NonConvergence(usize),
    #[error("{method} requires a {expected} panel")]
    WrongScenario {
        method: &'static str,
        expected: &'static str,
    },
    #[error("synthetic control needs at least two control units")]
    InfeasibleFit,
    #[error("differenced series is degenerate (zero variance)")]
    DegenerateVariance,
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineMethod {
    Lm,
    LmAr1,
    Arimax,
    ObservedY,
    Scm,
    Did,
}

/// A fitted baseline and its effect path.
#[derive(Debug, Clone)]
pub struct BaselineFit {
    pub method: BaselineMethod,
    /// Method-specific parameter vector.
    pub coefficients: Vec<f64>,
    /// Standard errors aligned with `coefficients`; empty where the method
    /// defines none.
    pub coefficient_se: Vec<f64>,
    pub residual_variance: f64,
    pub date: DatePath,
}

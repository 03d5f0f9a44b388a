//! Estimation of dynamic average treatment effects (DATE) for time series
//! interventions.
//!
//! A single intervention at time `t_c` splits each unit's outcome path into a
//! pre-treatment and a post-treatment segment. The DATE at horizon `h` is the
//! difference between the expected treated and control trajectories at
//! `t_c + h`. Two estimation regimes are covered:
//!
//! * many comparable units: dynamic inverse-probability weighting ([`dipw`]),
//! * scarce treated units: a dynamic linear model with forward filtering,
//!   backward sampling and counterfactual branching at `t_c` ([`dlm`]).
//!
//! The [`dgp`] module generates synthetic panels from an AR(1) process with
//! discount stochastic volatility, [`baselines`] provides the comparison
//! estimators (LM, LM-AR(1), ARIMAX, observed-series differences, synthetic
//! control, difference-in-differences), and [`eval`] computes the Monte Carlo
//! metrics (MSE, coverage probability, quantile-coverage curves).

pub mod baselines;
pub mod config;
pub mod date;
pub mod design;
pub mod dgp;
pub mod dipw;
pub mod dlm;
pub mod eval;
pub mod oracle;
pub mod panel;
pub mod rng;
pub mod stats;

pub use config::{ScenarioConfig, ScenarioKind};
pub use date::DatePath;
pub use design::InterventionDesign;
pub use panel::{SeriesPanel, UnitSeries};

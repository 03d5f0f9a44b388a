//! Scenario configuration for the Monte Carlo study.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("AR(1) coefficient must satisfy |theta| < 1, got {0}")]
    InvalidArCoef(f64),
    #[error("volatility discount must lie in (0, 1), got {0}")]
    InvalidVolDiscount(f64),
    #[error("initial variance must be positive, got {0}")]
    InvalidInitialVariance(f64),
    #[error("intervention index {t_c} must satisfy 0 < t_c < {horizon}")]
    InvalidIntervention { t_c: usize, horizon: usize },
    #[error("{kind:?} requires {expected}, got {n_treated} treated / {n_control} control")]
    UnitCountMismatch {
        kind: ScenarioKind,
        expected: &'static str,
        n_treated: usize,
        n_control: usize,
    },
    #[error("initial value must be finite")]
    InvalidInitialValue,
    #[error("confounded assignment parameters must be finite")]
    InvalidAssignment,
}

/// Scenario taxonomy by counts of treated and control units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    ManyMany,
    OneMany,
    OneOne,
    OneNone,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::ManyMany => "many_many",
            ScenarioKind::OneMany => "one_many",
            ScenarioKind::OneOne => "one_one",
            ScenarioKind::OneNone => "one_none",
        }
    }
}

/// How treatment is assigned to simulated units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Assignment {
    /// The first `n_treated` units are treated; valid under randomization
    /// because simulated units are exchangeable.
    Designed,
    /// Treatment drawn per unit from a logistic model in the last
    /// pre-treatment outcome, `P(Z=1) = logit^{-1}(intercept + slope * y_{t_c-1})`.
    Confounded { intercept: f64, slope: f64 },
}

impl Default for Assignment {
    fn default() -> Self {
        Assignment::Designed
    }
}

fn default_assignment() -> Assignment {
    Assignment::Designed
}

/// Full parameterization of one Monte Carlo scenario.
///
/// Serializes to a flat JSON object with snake_case keys; unknown keys are
/// rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    /// Last time index; paths run over `0 ..= horizon`.
    pub horizon: usize,
    /// First post-treatment time index.
    pub t_c: usize,
    /// AR(1) coefficient.
    pub ar_coef: f64,
    /// Pre-treatment drift (intercept).
    pub b1: f64,
    /// Spot effect at the intervention.
    pub b2: f64,
    /// Persistent post-treatment drift for treated units.
    pub b3: f64,
    /// Discount factor of the Beta-Gamma volatility walk, in (0, 1).
    pub vol_discount: f64,
    /// Initial observation variance.
    pub sigma2_0: f64,
    /// Initial outcome; defaults to the stationary mean `b1 / (1 - ar_coef)`.
    #[serde(default)]
    pub y_0: Option<f64>,
    pub n_treated: usize,
    pub n_control: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_assignment")]
    pub assignment: Assignment,
}

impl ScenarioConfig {
    /// Scenario with the simulation-study parameter values: `b1 = 0.01`,
    /// `b2 = 0.5`, `b3 = -0.03`, `vol_discount = 0.95`, treatment in the
    /// middle of the series, and 100 units per populated arm.
    pub fn preset(kind: ScenarioKind, horizon: usize, seed: u64) -> Self {
        let ar_coef = match horizon {
            0..=99 => 0.75,
            100..=199 => 0.8,
            _ => 0.9,
        };
        let (n_treated, n_control) = match kind {
            ScenarioKind::ManyMany => (100, 100),
            ScenarioKind::OneMany => (1, 100),
            ScenarioKind::OneOne => (1, 1),
            ScenarioKind::OneNone => (1, 0),
        };
        Self {
            kind,
            horizon,
            t_c: horizon / 2 + 1,
            ar_coef,
            b1: 0.01,
            b2: 0.5,
            b3: -0.03,
            vol_discount: 0.95,
            sigma2_0: 0.01,
            y_0: None,
            n_treated,
            n_control,
            replications: 1000,
            seed,
            assignment: Assignment::Designed,
        }
    }

    /// Stationary mean of the control process, `b1 / (1 - ar_coef)`.
    pub fn stationary_mean(&self) -> f64 {
        self.b1 / (1.0 - self.ar_coef)
    }

    /// Initial outcome value, defaulting to the stationary mean.
    pub fn initial_value(&self) -> f64 {
        self.y_0.unwrap_or_else(|| self.stationary_mean())
    }

    pub fn n_units(&self) -> usize {
        self.n_treated + self.n_control
    }

    /// Number of post-treatment horizons, `T - t_c + 1`.
    pub fn n_horizons(&self) -> usize {
        self.horizon - self.t_c + 1
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.ar_coef.is_finite() && self.ar_coef.abs() < 1.0) {
            return Err(ConfigError::InvalidArCoef(self.ar_coef));
        }
        if !(self.vol_discount > 0.0 && self.vol_discount < 1.0) {
            return Err(ConfigError::InvalidVolDiscount(self.vol_discount));
        }
        if !(self.sigma2_0 > 0.0 && self.sigma2_0.is_finite()) {
            return Err(ConfigError::InvalidInitialVariance(self.sigma2_0));
        }
        if self.t_c == 0 || self.t_c >= self.horizon {
            return Err(ConfigError::InvalidIntervention {
                t_c: self.t_c,
                horizon: self.horizon,
            });
        }
        if let Some(y0) = self.y_0 {
            if !y0.is_finite() {
                return Err(ConfigError::InvalidInitialValue);
            }
        }
        if let Assignment::Confounded { intercept, slope } = self.assignment {
            if !(intercept.is_finite() && slope.is_finite()) {
                return Err(ConfigError::InvalidAssignment);
            }
        }
        let (ok, expected) = match self.kind {
            ScenarioKind::ManyMany => (
                self.n_treated >= 2 && self.n_control >= 2,
                "n_treated >= 2 and n_control >= 2",
            ),
            ScenarioKind::OneMany => (
                self.n_treated == 1 && self.n_control >= 2,
                "n_treated = 1 and n_control >= 2",
            ),
            ScenarioKind::OneOne => (
                self.n_treated == 1 && self.n_control == 1,
                "n_treated = 1 and n_control = 1",
            ),
            ScenarioKind::OneNone => (
                self.n_treated == 1 && self.n_control == 0,
                "n_treated = 1 and n_control = 0",
            ),
        };
        if !ok {
            return Err(ConfigError::UnitCountMismatch {
                kind: self.kind,
                expected,
                n_treated: self.n_treated,
                n_control: self.n_control,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_is_valid_for_all_kinds() {
        for kind in [
            ScenarioKind::ManyMany,
            ScenarioKind::OneMany,
            ScenarioKind::OneOne,
            ScenarioKind::OneNone,
        ] {
            ScenarioConfig::preset(kind, 72, 1).validate().unwrap();
        }
    }

    #[test]
    fn preset_places_intervention_mid_series() {
        assert_eq!(ScenarioConfig::preset(ScenarioKind::OneNone, 72, 1).t_c, 37);
        assert_eq!(
            ScenarioConfig::preset(ScenarioKind::OneNone, 120, 1).t_c,
            61
        );
        assert_eq!(
            ScenarioConfig::preset(ScenarioKind::OneNone, 240, 1).t_c,
            121
        );
    }

    #[test]
    fn rejects_explosive_ar_coefficient() {
        let mut cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 72, 1);
        cfg.ar_coef = 1.0;
        assert_eq!(cfg.validate().unwrap_err(), ConfigError::InvalidArCoef(1.0));
    }

    #[test]
    fn rejects_unit_counts_incompatible_with_kind() {
        let mut cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 72, 1);
        cfg.n_control = 3;
        assert!(matches!(
            cfg.validate().unwrap_err(),
            ConfigError::UnitCountMismatch { .. }
        ));
    }

    #[test]
    fn json_round_trip_preserves_config() {
        let cfg = ScenarioConfig::preset(ScenarioKind::ManyMany, 72, 42);
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_json_keys_are_rejected() {
        let cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 72, 1);
        let mut value = serde_json::to_value(&cfg).unwrap();
        value["bogus"] = serde_json::json!(1);
        assert!(serde_json::from_value::<ScenarioConfig>(value).is_err());
    }

    #[test]
    fn default_initial_value_is_stationary_mean() {
        let cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 120, 1);
        assert!((cfg.initial_value() - 0.01 / 0.2).abs() < 1e-12);
    }
}

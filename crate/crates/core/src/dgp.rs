//! Synthetic panel generation.
//!
//! Units follow an AR(1) process with drift `b1` that, when treated, jumps by
//! `b2 + b3` at the intervention and drifts by `b3` afterwards:
//!
//! ```text
//! t < t_c:  y_t = theta * y_{t-1} + b1 + e_t
//! t = t_c:  y_t = y_{t-1} + b2 + b3 + e_t          (treated)
//! t > t_c:  y_t = theta * y_{t-1} + b3 + e_t       (treated)
//! ```
//!
//! with `e_t ~ N(0, sigma2_t)` and observation variances evolving as a
//! Beta-Gamma random walk `sigma2_t = sigma2_{t-1} * (beta / eta_t)`,
//! `eta_t ~ Beta(beta * (t + T/2) / 2, (1 - beta) * (t + T/2) / 2)`.
//!
//! Every replication is a pure function of `(config, replication index)`:
//! each unit owns volatility, noise and assignment streams keyed by
//! `(seed, rep, unit, role)`, so results do not depend on execution order.

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use thiserror::Error;

use crate::config::{Assignment, ConfigError, ScenarioConfig};
use crate::date::DatePath;
use crate::oracle::true_date_oracle;
use crate::panel::{SeriesPanel, UnitSeries};
use crate::rng::{role, stream};

#[derive(Debug, Error, PartialEq)]
pub enum DgpError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("Beta parameters must be positive, got ({0}, {1})")]
    InvalidBetaParams(f64, f64),
}

/// A strictly positive path of per-time observation variances.
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityPath {
    /// `sigma2_t` for `t = 1 ..= T`.
    pub sigma2: Vec<f64>,
}

impl VolatilityPath {
    /// Validates positivity and finiteness of every entry.
    pub fn new(sigma2: Vec<f64>) -> Result<Self, DgpError> {
        for &v in &sigma2 {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DgpError::InvalidBetaParams(v, v));
            }
        }
        Ok(Self { sigma2 })
    }
}

/// One simulated replication together with its population truth.
#[derive(Debug, Clone)]
pub struct SimulatedReplication {
    pub panel: SeriesPanel,
    pub truth: DatePath,
    pub rep_seed: u64,
}

/// Draws a volatility path of length `T` from the Beta-Gamma walk.
pub fn simulate_volatility<R: Rng>(
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> Result<VolatilityPath, DgpError> {
    cfg.validate()?;
    let beta = cfg.vol_discount;
    let horizon = cfg.horizon as f64;
    let mut sigma2 = Vec::with_capacity(cfg.horizon);
    let mut current = cfg.sigma2_0;
    for t in 1..=cfg.horizon {
        let df = (t as f64 + horizon / 2.0) / 2.0;
        let a = beta * df;
        let b = (1.0 - beta) * df;
        if !(a > 0.0 && b > 0.0) {
            return Err(DgpError::InvalidBetaParams(a, b));
        }
        let eta: f64 = Beta::new(a, b)
            .map_err(|_| DgpError::InvalidBetaParams(a, b))?
            .sample(rng);
        current *= beta / eta;
        sigma2.push(current);
    }
    Ok(VolatilityPath { sigma2 })
}

/// Advances one step of the outcome recursion.
fn step(cfg: &ScenarioConfig, treated: bool, t: usize, prev: f64, noise: f64) -> f64 {
    if t < cfg.t_c || !treated {
        cfg.ar_coef * prev + cfg.b1 + noise
    } else if t == cfg.t_c {
        prev + cfg.b2 + cfg.b3 + noise
    } else {
        cfg.ar_coef * prev + cfg.b3 + noise
    }
}

/// Builds a path from explicit noise values `e_1 ..= e_T`.
///
/// Exposed so tests can drive the recursion with zero or hand-chosen noise.
pub fn path_with_noise(cfg: &ScenarioConfig, treated: bool, noise: &[f64]) -> Vec<f64> {
    assert_eq!(noise.len(), cfg.horizon);
    let mut path = Vec::with_capacity(cfg.horizon + 1);
    path.push(cfg.initial_value());
    for t in 1..=cfg.horizon {
        let next = step(cfg, treated, t, path[t - 1], noise[t - 1]);
        path.push(next);
    }
    path
}

fn draw_noise<R: Rng>(vol: &VolatilityPath, rng: &mut R) -> Vec<f64> {
    vol.sigma2
        .iter()
        .map(|&s2| {
            let z: f64 = StandardNormal.sample(rng);
            z * s2.sqrt()
        })
        .collect()
}

/// Simulates one unit given its volatility path and noise stream.
pub fn simulate_unit<R: Rng>(
    cfg: &ScenarioConfig,
    treated: bool,
    vol: &VolatilityPath,
    rng: &mut R,
) -> UnitSeries {
    let noise = draw_noise(vol, rng);
    UnitSeries::new(path_with_noise(cfg, treated, &noise), treated)
}

/// Simulates both potential-outcome arms of one unit on a shared noise path.
///
/// The two returned series agree before `t_c` and differ only through the
/// treatment branch, so their difference is a draw of the unit-level effect.
pub fn simulate_potential_pair<R: Rng>(
    cfg: &ScenarioConfig,
    vol: &VolatilityPath,
    rng: &mut R,
) -> (UnitSeries, UnitSeries) {
    let noise = draw_noise(vol, rng);
    (
        UnitSeries::new(path_with_noise(cfg, true, &noise), true),
        UnitSeries::new(path_with_noise(cfg, false, &noise), false),
    )
}

/// Simulates the pre-treatment segment `y_0 .. y_{t_c - 1}` and then extends
/// it with the arm decided by `treated`, consuming one noise value per step.
fn simulate_unit_assigned<R: Rng>(
    cfg: &ScenarioConfig,
    vol: &VolatilityPath,
    noise_rng: &mut R,
    assign_rng: &mut R,
) -> UnitSeries {
    let noise = draw_noise(vol, noise_rng);
    // Pre-treatment values do not depend on the arm, so the assignment draw
    // may condition on y_{t_c - 1}.
    let pre = path_with_noise(cfg, false, &noise);
    let treated = match cfg.assignment {
        Assignment::Designed => unreachable!("designed assignment handled by caller"),
        Assignment::Confounded { intercept, slope } => {
            let eta = intercept + slope * pre[cfg.t_c - 1];
            let p = 1.0 / (1.0 + (-eta).exp());
            assign_rng.gen::<f64>() < p
        }
    };
    UnitSeries::new(path_with_noise(cfg, treated, &noise), treated)
}

/// Simulates one full replication: `n_treated + n_control` units, each with
/// independent volatility and noise streams, plus the population truth.
pub fn simulate_scenario(
    cfg: &ScenarioConfig,
    rep_index: u64,
) -> Result<SimulatedReplication, DgpError> {
    cfg.validate()?;
    let truth = true_date_oracle(cfg)?;
    let n = cfg.n_units();
    let mut units = Vec::with_capacity(n);
    for unit_idx in 0..n {
        let mut vol_rng = stream(cfg.seed, rep_index, unit_idx as u64, role::VOLATILITY);
        let vol = simulate_volatility(cfg, &mut vol_rng)?;
        let mut noise_rng = stream(cfg.seed, rep_index, unit_idx as u64, role::NOISE);
        let unit = match cfg.assignment {
            Assignment::Designed => {
                let treated = unit_idx < cfg.n_treated;
                simulate_unit(cfg, treated, &vol, &mut noise_rng)
            }
            Assignment::Confounded { .. } => {
                let mut assign_rng =
                    stream(cfg.seed, rep_index, unit_idx as u64, role::ASSIGNMENT);
                simulate_unit_assigned(cfg, &vol, &mut noise_rng, &mut assign_rng)
            }
        };
        units.push(unit);
    }
    let panel = SeriesPanel::new(units, cfg.t_c, cfg.horizon).expect("simulated panel is valid");
    Ok(SimulatedReplication {
        panel,
        truth,
        rep_seed: rep_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioKind;
    use crate::rng::stream;

    fn cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 72, 11);
        cfg.ar_coef = 0.8;
        cfg
    }

    #[test]
    fn volatility_stays_positive() {
        let cfg = cfg();
        let mut rng = stream(3, 0, 0, role::VOLATILITY);
        for _ in 0..50 {
            let vol = simulate_volatility(&cfg, &mut rng).unwrap();
            assert!(vol.sigma2.iter().all(|&v| v > 0.0 && v.is_finite()));
        }
    }

    #[test]
    fn volatility_is_constant_in_the_unit_discount_limit() {
        let mut cfg = cfg();
        cfg.vol_discount = 0.999_999;
        let mut rng = stream(5, 0, 0, role::VOLATILITY);
        let vol = simulate_volatility(&cfg, &mut rng).unwrap();
        for &v in &vol.sigma2 {
            assert!((v / cfg.sigma2_0 - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn zero_noise_control_path_stays_at_stationary_mean() {
        let cfg = cfg();
        let path = path_with_noise(&cfg, false, &vec![0.0; cfg.horizon]);
        for &v in &path {
            assert!((v - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_treated_path_jumps_at_intervention() {
        let cfg = cfg();
        let path = path_with_noise(&cfg, true, &vec![0.0; cfg.horizon]);
        assert!((path[cfg.t_c - 1] - 0.05).abs() < 1e-12);
        assert!((path[cfg.t_c] - 0.52).abs() < 1e-12);
    }

    #[test]
    fn scenario_kinds_produce_expected_arm_counts() {
        let mm = ScenarioConfig::preset(ScenarioKind::ManyMany, 72, 9);
        let rep = simulate_scenario(&mm, 0).unwrap();
        assert_eq!(rep.panel.n_treated(), 100);
        assert_eq!(rep.panel.n_control(), 100);

        let on = ScenarioConfig::preset(ScenarioKind::OneNone, 72, 9);
        let rep = simulate_scenario(&on, 0).unwrap();
        assert_eq!(rep.panel.n_treated(), 1);
        assert_eq!(rep.panel.n_control(), 0);
    }

    #[test]
    fn replications_are_deterministic() {
        let cfg = ScenarioConfig::preset(ScenarioKind::ManyMany, 72, 9);
        let a = simulate_scenario(&cfg, 3).unwrap();
        let b = simulate_scenario(&cfg, 3).unwrap();
        assert_eq!(a.panel, b.panel);
        let c = simulate_scenario(&cfg, 4).unwrap();
        assert_ne!(a.panel, c.panel);
    }

    #[test]
    fn potential_pair_shares_the_pre_treatment_segment() {
        let cfg = cfg();
        let mut vol_rng = stream(cfg.seed, 0, 0, role::VOLATILITY);
        let vol = simulate_volatility(&cfg, &mut vol_rng).unwrap();
        let mut noise_rng = stream(cfg.seed, 0, 0, role::NOISE);
        let (treated, control) = simulate_potential_pair(&cfg, &vol, &mut noise_rng);
        for t in 0..cfg.t_c {
            assert_eq!(treated.path[t], control.path[t]);
        }
        assert_ne!(treated.path[cfg.t_c], control.path[cfg.t_c]);
    }

    #[test]
    fn confounded_assignment_is_deterministic_given_keys() {
        let mut cfg = ScenarioConfig::preset(ScenarioKind::ManyMany, 40, 21);
        cfg.t_c = 20;
        cfg.assignment = Assignment::Confounded {
            intercept: 0.0,
            slope: 2.0,
        };
        let a = simulate_scenario(&cfg, 0).unwrap();
        let b = simulate_scenario(&cfg, 0).unwrap();
        assert_eq!(a.panel, b.panel);
        // Both arms should be populated with high probability at n = 200.
        assert!(a.panel.n_treated() > 0 && a.panel.n_control() > 0);
    }
}

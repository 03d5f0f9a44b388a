//! Closed-form population effect path implied by the simulation process.

use crate::config::{ConfigError, ScenarioConfig};
use crate::date::DatePath;

/// Exact population DATE of a scenario, computed from the mean recursions of
/// the generating process.
///
/// The control mean obeys `m0_t = theta * m0_{t-1} + b1` from `y_0`; the
/// treated mean equals the control mean before `t_c`, jumps to
/// `m_{t_c-1} + b2 + b3` at `t_c`, and then follows
/// `m1_t = theta * m1_{t-1} + b3`. The returned path is the pointwise
/// difference over `h = 0 ..= T - t_c`, with a degenerate zero-width band
/// since the oracle is deterministic.
pub fn true_date_oracle(cfg: &ScenarioConfig) -> Result<DatePath, ConfigError> {
    cfg.validate()?;
    let theta = cfg.ar_coef;
    // Shared pre-treatment mean at t_c - 1.
    let mut pre_mean = cfg.initial_value();
    for _ in 1..cfg.t_c {
        pre_mean = theta * pre_mean + cfg.b1;
    }
    let mut m0 = theta * pre_mean + cfg.b1;
    let mut m1 = pre_mean + cfg.b2 + cfg.b3;
    let mut date = Vec::with_capacity(cfg.n_horizons());
    date.push(m1 - m0);
    for _ in 1..cfg.n_horizons() {
        m0 = theta * m0 + cfg.b1;
        m1 = theta * m1 + cfg.b3;
        date.push(m1 - m0);
    }
    Ok(DatePath::exact(date))
}

/// Fixed point of the effect recursion, `(b3 - b1) / (1 - theta)`.
pub fn limiting_date(cfg: &ScenarioConfig) -> f64 {
    (cfg.b3 - cfg.b1) / (1.0 - cfg.ar_coef)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioKind;

    fn paper_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 240, 7);
        cfg.ar_coef = 0.8;
        cfg
    }

    #[test]
    fn initial_effect_is_spot_plus_persistent() {
        let date = true_date_oracle(&paper_cfg()).unwrap();
        // Started at the stationary mean, DATE(0) = b2 + b3.
        assert!((date.estimate[0] - 0.47).abs() < 1e-12);
    }

    #[test]
    fn effect_converges_to_drift_ratio() {
        let cfg = paper_cfg();
        let date = true_date_oracle(&cfg).unwrap();
        let last = *date.estimate.last().unwrap();
        assert!((limiting_date(&cfg) - (-0.20)).abs() < 1e-12);
        assert!((last - (-0.20)).abs() < 1e-9);
    }

    #[test]
    fn matches_geometric_closed_form() {
        let cfg = paper_cfg();
        let date = true_date_oracle(&cfg).unwrap();
        let limit = limiting_date(&cfg);
        for (h, &value) in date.estimate.iter().enumerate() {
            let closed = cfg.ar_coef.powi(h as i32) * (0.47 - limit) + limit;
            assert!((value - closed).abs() < 1e-10, "h = {h}");
        }
    }

    #[test]
    fn shape_is_strictly_decreasing_with_single_sign_change() {
        let date = true_date_oracle(&paper_cfg()).unwrap();
        let mut crossings = 0;
        for h in 1..date.estimate.len() {
            assert!(date.estimate[h] < date.estimate[h - 1]);
            if date.estimate[h - 1] > 0.0 && date.estimate[h] <= 0.0 {
                crossings += 1;
            }
        }
        assert_eq!(crossings, 1);
        assert!(date.estimate[0] > 0.0);
    }

    #[test]
    fn equal_drift_arms_decay_geometrically_to_zero() {
        let mut cfg = paper_cfg();
        cfg.b3 = cfg.b1;
        let date = true_date_oracle(&cfg).unwrap();
        assert!((date.estimate[0] - (cfg.b2 + cfg.b3)).abs() < 1e-12);
        for h in 1..date.estimate.len() {
            let expected = cfg.ar_coef * date.estimate[h - 1];
            assert!((date.estimate[h] - expected).abs() < 1e-12);
        }
        assert!(date.estimate.last().unwrap().abs() < 1e-9);
    }

    #[test]
    fn rejects_unit_root() {
        let mut cfg = paper_cfg();
        cfg.ar_coef = 1.0;
        assert!(true_date_oracle(&cfg).is_err());
    }
}

//! The intervention design: lagged outcome plus the spot, persistent and
//! trend indicator rows that decompose a treatment response.
//!
//! The three indicators encode, per time index `t`:
//!
//! * spot      — `1` only at `t = t_c` (one-time impulse),
//! * persistent — `1` for all `t >= t_c` (level shift),
//! * trend     — `t - t_c + 1` for `t >= t_c` (slope change),
//!
//! all gated by the unit's treatment flag. The stored rows materialize the
//! indicators over `t = 0 .. T`; regression code asks for the regressor
//! vector of an observation through [`InterventionDesign::regressor_row`],
//! which pairs the indicators at time `t` with the lagged outcome `y_{t-1}`.

use crate::panel::{SeriesPanel, UnitSeries};

/// The four design rows for one unit, each of length `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionDesign {
    /// Row 1: `y_0 .. y_{T-1}`.
    pub lagged_outcome: Vec<f64>,
    /// Row 2: one-time impulse at `t_c`.
    pub spot: Vec<f64>,
    /// Row 3: level shift from `t_c` onward.
    pub persistent: Vec<f64>,
    /// Row 4: ramp `t - t_c + 1` from `t_c` onward.
    pub trend: Vec<f64>,
    t_c: usize,
    treated: bool,
}

impl InterventionDesign {
    pub fn t_c(&self) -> usize {
        self.t_c
    }

    pub fn treated(&self) -> bool {
        self.treated
    }

    /// Spot indicator at time `t`.
    pub fn spot_at(&self, t: usize) -> f64 {
        if self.treated && t == self.t_c {
            1.0
        } else {
            0.0
        }
    }

    /// Persistent indicator at time `t`.
    pub fn persistent_at(&self, t: usize) -> f64 {
        if self.treated && t >= self.t_c {
            1.0
        } else {
            0.0
        }
    }

    /// Trend ramp at time `t`.
    pub fn trend_at(&self, t: usize) -> f64 {
        if self.treated && t >= self.t_c {
            (t - self.t_c + 1) as f64
        } else {
            0.0
        }
    }

    /// Indicator triple `(spot, persistent, trend)` at time `t`.
    pub fn indicators_at(&self, t: usize) -> (f64, f64, f64) {
        (self.spot_at(t), self.persistent_at(t), self.trend_at(t))
    }

    /// Regressor vector `(y_{t-1}, spot_t, persistent_t, trend_t)` for the
    /// observation at time `t`, `1 <= t <= T`.
    pub fn regressor_row(&self, t: usize) -> [f64; 4] {
        assert!(t >= 1 && t <= self.lagged_outcome.len(), "t out of range");
        [
            self.lagged_outcome[t - 1],
            self.spot_at(t),
            self.persistent_at(t),
            self.trend_at(t),
        ]
    }
}

/// Builds the design rows for one unit of a panel.
///
/// For a control unit all three indicator rows are zero; the lagged-outcome
/// row is always populated. Deterministic and pure.
pub fn build_design(panel: &SeriesPanel, unit: &UnitSeries) -> InterventionDesign {
    let t = panel.horizon();
    let t_c = panel.t_c();
    debug_assert_eq!(unit.path.len(), t + 1);
    let lagged_outcome = unit.path[..t].to_vec();
    let mut design = InterventionDesign {
        lagged_outcome,
        spot: vec![0.0; t],
        persistent: vec![0.0; t],
        trend: vec![0.0; t],
        t_c,
        treated: unit.treated,
    };
    for i in 0..t {
        design.spot[i] = design.spot_at(i);
        design.persistent[i] = design.persistent_at(i);
        design.trend[i] = design.trend_at(i);
    }
    design
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel_of(path: Vec<f64>, treated: bool, t_c: usize) -> SeriesPanel {
        let horizon = path.len() - 1;
        SeriesPanel::new(vec![UnitSeries::new(path, treated)], t_c, horizon).unwrap()
    }

    #[test]
    fn treated_rows_match_indicator_definitions() {
        let panel = panel_of(vec![1.0, 2.0, 3.0, 4.0, 5.0], true, 2);
        let design = build_design(&panel, &panel.units()[0]);
        assert_eq!(design.lagged_outcome, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(design.spot, vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(design.persistent, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(design.trend, vec![0.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn control_rows_are_zero_with_populated_lag() {
        let panel = panel_of(vec![1.0, 2.0, 3.0, 4.0, 5.0], false, 2);
        let design = build_design(&panel, &panel.units()[0]);
        assert_eq!(design.lagged_outcome, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(design.spot, vec![0.0; 4]);
        assert_eq!(design.persistent, vec![0.0; 4]);
        assert_eq!(design.trend, vec![0.0; 4]);
    }

    #[test]
    fn trend_ramp_is_truncated_to_row_length() {
        let panel = panel_of(vec![1.0, 2.0, 3.0, 4.0], true, 1);
        let design = build_design(&panel, &panel.units()[0]);
        assert_eq!(design.trend, vec![0.0, 1.0, 2.0]);
        // The ramp itself continues past the stored row.
        assert_eq!(design.trend_at(3), 3.0);
    }

    #[test]
    fn regressor_rows_align_intervention_onset_with_t_c() {
        let panel = panel_of(vec![1.0, 2.0, 3.0, 4.0, 5.0], true, 2);
        let design = build_design(&panel, &panel.units()[0]);
        // Observation at t_c carries the spot impulse and lag y_{t_c - 1}.
        assert_eq!(design.regressor_row(2), [2.0, 1.0, 1.0, 1.0]);
        assert_eq!(design.regressor_row(1), [1.0, 0.0, 0.0, 0.0]);
        assert_eq!(design.regressor_row(3), [3.0, 0.0, 1.0, 2.0]);
        assert_eq!(design.regressor_row(4), [4.0, 0.0, 1.0, 3.0]);
    }

    #[test]
    fn build_is_deterministic() {
        let panel = panel_of(vec![0.3, -1.0, 2.5, 0.0, 9.125], true, 3);
        let a = build_design(&panel, &panel.units()[0]);
        let b = build_design(&panel, &panel.units()[0]);
        assert_eq!(a, b);
    }
}

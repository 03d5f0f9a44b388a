//! Outcome panels: unit trajectories with treatment flags and a common
//! intervention time.

use thiserror::Error;

/// Errors raised when a panel violates its structural invariants.
#[derive(Debug, Error, PartialEq)]
pub enum PanelError {
    #[error("panel must contain at least one unit")]
    EmptyPanel,
    #[error("unit {unit} has {got} values, expected {expected} (horizon + 1)")]
    LengthMismatch {
        unit: usize,
        got: usize,
        expected: usize,
    },
    #[error("unit {unit} has a non-finite value at index {index}")]
    NonFinite { unit: usize, index: usize },
    #[error("intervention index {t_c} out of range, must satisfy 0 < t_c < {horizon}")]
    InterventionOutOfRange { t_c: usize, horizon: usize },
}

/// One observed outcome trajectory and its treatment assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSeries {
    /// Outcome values indexed by time, `y_0 ..= y_T`.
    pub path: Vec<f64>,
    /// Treatment flag `Z_i`.
    pub treated: bool,
}

impl UnitSeries {
    pub fn new(path: Vec<f64>, treated: bool) -> Self {
        Self { path, treated }
    }
}

/// A collection of unit trajectories sharing an intervention time.
///
/// Every path holds `horizon + 1` values (indices `0 ..= T`); the observation
/// at index `t_c` is the first post-treatment point.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    units: Vec<UnitSeries>,
    t_c: usize,
    horizon: usize,
}

impl SeriesPanel {
    /// Validates the structural invariants and builds a panel.
    pub fn new(units: Vec<UnitSeries>, t_c: usize, horizon: usize) -> Result<Self, PanelError> {
        if units.is_empty() {
            return Err(PanelError::EmptyPanel);
        }
        if t_c == 0 || t_c >= horizon {
            return Err(PanelError::InterventionOutOfRange { t_c, horizon });
        }
        for (i, unit) in units.iter().enumerate() {
            if unit.path.len() != horizon + 1 {
                return Err(PanelError::LengthMismatch {
                    unit: i,
                    got: unit.path.len(),
                    expected: horizon + 1,
                });
            }
            if let Some(bad) = unit.path.iter().position(|v| !v.is_finite()) {
                return Err(PanelError::NonFinite {
                    unit: i,
                    index: bad,
                });
            }
        }
        Ok(Self {
            units,
            t_c,
            horizon,
        })
    }

    pub fn units(&self) -> &[UnitSeries] {
        &self.units
    }

    /// First post-treatment time index.
    pub fn t_c(&self) -> usize {
        self.t_c
    }

    /// Last time index `T`; paths have `T + 1` values.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of post-treatment horizons, `T - t_c + 1`.
    pub fn n_horizons(&self) -> usize {
        self.horizon - self.t_c + 1
    }

    pub fn n_treated(&self) -> usize {
        self.units.iter().filter(|u| u.treated).count()
    }

    pub fn n_control(&self) -> usize {
        self.units.len() - self.n_treated()
    }

    /// Returns the first treated unit, if any.
    pub fn first_treated(&self) -> Option<&UnitSeries> {
        self.units.iter().find(|u| u.treated)
    }

    pub fn treated_units(&self) -> impl Iterator<Item = &UnitSeries> {
        self.units.iter().filter(|u| u.treated)
    }

    pub fn control_units(&self) -> impl Iterator<Item = &UnitSeries> {
        self.units.iter().filter(|u| !u.treated)
    }
}

//! Time-indexed effect estimates with credible/confidence bounds.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DateError {
    #[error("estimate and bounds must have equal lengths")]
    LengthMismatch,
    #[error("bounds must satisfy lower <= estimate <= upper at horizon {0}")]
    BoundsOutOfOrder(usize),
    #[error("interval level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
}

/// Pointwise interval at a stated nominal level.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

/// Spot/persistent/trend point paths whose sum is the total estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub spot: Vec<f64>,
    pub persistent: Vec<f64>,
    pub trend: Vec<f64>,
}

/// A dynamic treatment effect path over horizons `h = 0 ..= T - t_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatePath {
    pub estimate: Vec<f64>,
    pub band: Option<Band>,
    pub components: Option<Components>,
}

impl DatePath {
    /// Point path without interval information.
    pub fn point(estimate: Vec<f64>) -> Self {
        Self {
            estimate,
            band: None,
            components: None,
        }
    }

    /// Path with a validated pointwise band.
    pub fn with_band(
        estimate: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        level: f64,
    ) -> Result<Self, DateError> {
        if !(level > 0.0 && level < 1.0) {
            return Err(DateError::InvalidLevel(level));
        }
        if lower.len() != estimate.len() || upper.len() != estimate.len() {
            return Err(DateError::LengthMismatch);
        }
        for h in 0..estimate.len() {
            if !(lower[h] <= estimate[h] && estimate[h] <= upper[h]) {
                return Err(DateError::BoundsOutOfOrder(h));
            }
        }
        Ok(Self {
            estimate,
            band: Some(Band {
                lower,
                upper,
                level,
            }),
            components: None,
        })
    }

    /// Degenerate zero-width band at the estimate itself.
    pub fn exact(estimate: Vec<f64>) -> Self {
        let band = Band {
            lower: estimate.clone(),
            upper: estimate.clone(),
            level: 0.95,
        };
        Self {
            estimate,
            band: Some(band),
            components: None,
        }
    }

    pub fn n_horizons(&self) -> usize {
        self.estimate.len()
    }
}

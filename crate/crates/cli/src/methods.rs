//! The estimator menu and its dispatch onto panels.

use datekit_core::baselines::{fit_arimax, fit_did, fit_lm, fit_lm_ar1, observed_y};
use datekit_core::baselines::{fit_scm_detailed, BaselineFit};
use datekit_core::config::ScenarioKind;
use datekit_core::date::DatePath;
use datekit_core::dipw::{dipw_estimate, fit_propensity, panel_mean, FeatureSpec, PropensityFit};
use datekit_core::dlm::{default_discount_grid, fit_treated_series, DlmOptions, EffectDecomposition};
use datekit_core::eval::IntervalFamily;
use datekit_core::panel::SeriesPanel;
use datekit_core::stats::z_for_level;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropensitySource {
    /// The randomization design: a constant treated share.
    Known,
    /// Logistic regression on pre-treatment summaries.
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Difference of arm means with normal intervals.
    Mean,
    Dipw {
        stabilized: bool,
        propensity: PropensitySource,
    },
    Dlm,
    Lm,
    LmAr1,
    Arimax,
    ObservedY,
    Scm,
    Did,
}

impl Method {
    /// Canonical names used in CSV outputs and on the command line.
    pub fn name(&self) -> &'static str {
        match self {
            Method::Mean => "mean",
            Method::Dipw {
                stabilized: false,
                propensity: PropensitySource::Known,
            } => "dipw-known",
            Method::Dipw {
                stabilized: false,
                propensity: PropensitySource::Logistic,
            } => "dipw-logit",
            Method::Dipw {
                stabilized: true,
                propensity: PropensitySource::Known,
            } => "dipw-stab-known",
            Method::Dipw {
                stabilized: true,
                propensity: PropensitySource::Logistic,
            } => "dipw-stab-logit",
            Method::Dlm => "dlm",
            Method::Lm => "lm",
            Method::LmAr1 => "lm-ar1",
            Method::Arimax => "arimax",
            Method::ObservedY => "y",
            Method::Scm => "scm",
            Method::Did => "did",
        }
    }

    pub fn parse(name: &str) -> Result<Self, CliError> {
        Ok(match name {
            "mean" => Method::Mean,
            "dipw" | "dipw-logit" => Method::Dipw {
                stabilized: false,
                propensity: PropensitySource::Logistic,
            },
            "dipw-known" => Method::Dipw {
                stabilized: false,
                propensity: PropensitySource::Known,
            },
            "dipw-stab" | "dipw-stab-logit" => Method::Dipw {
                stabilized: true,
                propensity: PropensitySource::Logistic,
            },
            "dipw-stab-known" => Method::Dipw {
                stabilized: true,
                propensity: PropensitySource::Known,
            },
            "dlm" => Method::Dlm,
            "lm" => Method::Lm,
            "lm-ar1" => Method::LmAr1,
            "arimax" => Method::Arimax,
            "y" => Method::ObservedY,
            "scm" => Method::Scm,
            "did" => Method::Did,
            other => return Err(CliError::UnknownMethod(other.to_string())),
        })
    }

    /// Stable numeric tag entering the per-method random stream keys.
    pub fn stream_tag(&self) -> u64 {
        match self {
            Method::Mean => 1,
            Method::Dipw {
                stabilized: false,
                propensity: PropensitySource::Known,
            } => 2,
            Method::Dipw {
                stabilized: false,
                propensity: PropensitySource::Logistic,
            } => 3,
            Method::Dipw {
                stabilized: true,
                propensity: PropensitySource::Known,
            } => 4,
            Method::Dipw {
                stabilized: true,
                propensity: PropensitySource::Logistic,
            } => 5,
            Method::Dlm => 6,
            Method::Lm => 7,
            Method::LmAr1 => 8,
            Method::Arimax => 9,
            Method::ObservedY => 10,
            Method::Scm => 11,
            Method::Did => 12,
        }
    }

    /// Whether the method is reported for the given scenario kind, mirroring
    /// the scenario-by-method layout of the simulation study.
    pub fn compatible_with(&self, kind: ScenarioKind) -> bool {
        match self {
            Method::Mean | Method::Dipw { .. } => kind == ScenarioKind::ManyMany,
            Method::Dlm | Method::Lm | Method::LmAr1 | Method::Arimax => {
                kind != ScenarioKind::ManyMany
            }
            Method::ObservedY => kind != ScenarioKind::ManyMany,
            Method::Scm => kind == ScenarioKind::OneMany,
            Method::Did => kind == ScenarioKind::OneOne,
        }
    }

    pub fn ensure_compatible(&self, kind: ScenarioKind) -> Result<(), CliError> {
        if self.compatible_with(kind) {
            Ok(())
        } else {
            Err(CliError::IncompatibleMethod {
                method: self.name().to_string(),
                kind: kind.as_str().to_string(),
            })
        }
    }
}

/// Tuning knobs shared by the estimators.
#[derive(Debug, Clone)]
pub struct MethodOptions {
    /// Posterior draw count for the DLM.
    pub draws: usize,
    /// Discount grid for the DLM.
    pub grid: Vec<(f64, f64)>,
    /// Seed of the estimator's random streams.
    pub seed: u64,
}

impl MethodOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            draws: 5000,
            grid: default_discount_grid(),
            seed,
        }
    }
}

/// The estimate of one method on one panel.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    pub estimate: Vec<f64>,
    /// Queryable interval family; `None` for interval-free methods.
    pub intervals: Option<IntervalFamily>,
    /// Spot/persistent/trend decomposition, DLM only.
    pub decomposition: Option<EffectDecomposition>,
}

impl MethodOutput {
    /// The effect path with a 95% band when intervals exist.
    pub fn date_path(&self) -> DatePath {
        match &self.intervals {
            None => DatePath::point(self.estimate.clone()),
            Some(family) => {
                let (lower, upper) = family.central(0.95);
                let lower: Vec<f64> = lower
                    .iter()
                    .zip(&self.estimate)
                    .map(|(l, e)| l.min(*e))
                    .collect();
                let upper: Vec<f64> = upper
                    .iter()
                    .zip(&self.estimate)
                    .map(|(u, e)| u.max(*e))
                    .collect();
                DatePath::with_band(self.estimate.clone(), lower, upper, 0.95)
                    .expect("central band is ordered")
            }
        }
    }
}

fn normal_family(fit: &BaselineFit) -> Option<IntervalFamily> {
    let band = fit.date.band.as_ref()?;
    let z = z_for_level(band.level);
    let se: Vec<f64> = band
        .upper
        .iter()
        .zip(&fit.date.estimate)
        .map(|(u, e)| (u - e) / z)
        .collect();
    Some(IntervalFamily::Normal {
        estimate: fit.date.estimate.clone(),
        se,
    })
}

fn from_baseline(fit: BaselineFit) -> MethodOutput {
    MethodOutput {
        intervals: normal_family(&fit),
        estimate: fit.date.estimate,
        decomposition: None,
    }
}

/// Runs one estimator on a panel.
pub fn run_method(
    method: Method,
    panel: &SeriesPanel,
    opts: &MethodOptions,
) -> Result<MethodOutput, CliError> {
    let wrap = |e: String| CliError::Estimation(e);
    match method {
        Method::Mean => {
            let est = panel_mean(panel).map_err(|e| wrap(e.to_string()))?;
            Ok(MethodOutput {
                estimate: est.tau.clone(),
                intervals: Some(IntervalFamily::Normal {
                    estimate: est.tau,
                    se: est.pointwise_se,
                }),
                decomposition: None,
            })
        }
        Method::Dipw {
            stabilized,
            propensity,
        } => {
            let prop = match propensity {
                PropensitySource::Known => {
                    PropensityFit::from_treated_share(panel).map_err(|e| wrap(e.to_string()))?
                }
                PropensitySource::Logistic => fit_propensity(panel, FeatureSpec::Summary)
                    .map_err(|e| wrap(e.to_string()))?,
            };
            let est =
                dipw_estimate(panel, &prop, stabilized).map_err(|e| wrap(e.to_string()))?;
            Ok(MethodOutput {
                estimate: est.tau.clone(),
                intervals: Some(IntervalFamily::Normal {
                    estimate: est.tau,
                    se: est.pointwise_se,
                }),
                decomposition: None,
            })
        }
        Method::Dlm => {
            let mut dlm_opts = DlmOptions::new(opts.seed).with_draws(opts.draws);
            dlm_opts.grid = opts.grid.clone();
            let fit = fit_treated_series(panel, &dlm_opts).map_err(|e| wrap(e.to_string()))?;
            Ok(MethodOutput {
                estimate: fit.date.estimate.clone(),
                intervals: Some(IntervalFamily::Draws(fit.effect_draws)),
                decomposition: Some(fit.decomposition),
            })
        }
        Method::Lm => Ok(from_baseline(fit_lm(panel).map_err(|e| wrap(e.to_string()))?)),
        Method::LmAr1 => Ok(from_baseline(
            fit_lm_ar1(panel).map_err(|e| wrap(e.to_string()))?,
        )),
        Method::Arimax => Ok(from_baseline(
            fit_arimax(panel).map_err(|e| wrap(e.to_string()))?,
        )),
        Method::ObservedY => Ok(from_baseline(
            observed_y(panel).map_err(|e| wrap(e.to_string()))?,
        )),
        Method::Scm => {
            let (fit, gap_paths) = fit_scm_detailed(panel).map_err(|e| wrap(e.to_string()))?;
            let intervals = if gap_paths.len() >= 2 {
                // Placebo gaps shifted onto the estimate act as draws of the
                // effect path under the permutation distribution.
                let rows: Vec<Vec<f64>> = gap_paths
                    .iter()
                    .map(|gap| {
                        gap.iter()
                            .zip(&fit.date.estimate)
                            .map(|(g, e)| e + g)
                            .collect()
                    })
                    .collect();
                Some(IntervalFamily::Draws(rows))
            } else {
                None
            };
            Ok(MethodOutput {
                estimate: fit.date.estimate,
                intervals,
                decomposition: None,
            })
        }
        Method::Did => Ok(from_baseline(
            fit_did(panel).map_err(|e| wrap(e.to_string()))?,
        )),
    }
}

/// Derives the estimator seed for one `(scenario seed, replication, method)`
/// cell; SplitMix-style mixing keeps the streams distinct.
pub fn method_seed(scenario_seed: u64, rep: u64, method: Method) -> u64 {
    let mut state = scenario_seed
        .wrapping_add(rep.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(method.stream_tag().wrapping_mul(0xD1B5_4A32_D192_ED03));
    state ^= state >> 30;
    state = state.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    state ^= state >> 27;
    state = state.wrapping_mul(0x94D0_49BB_1331_11EB);
    state ^ (state >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for method in [
            Method::Mean,
            Method::Dipw {
                stabilized: false,
                propensity: PropensitySource::Known,
            },
            Method::Dipw {
                stabilized: true,
                propensity: PropensitySource::Logistic,
            },
            Method::Dlm,
            Method::Lm,
            Method::LmAr1,
            Method::Arimax,
            Method::ObservedY,
            Method::Scm,
            Method::Did,
        ] {
            assert_eq!(Method::parse(method.name()).unwrap(), method);
        }
        assert!(Method::parse("bogus").is_err());
    }

    #[test]
    fn compatibility_mirrors_the_scenario_grid() {
        use ScenarioKind::*;
        assert!(Method::Mean.compatible_with(ManyMany));
        assert!(!Method::Mean.compatible_with(OneNone));
        assert!(Method::Did.compatible_with(OneOne));
        assert!(!Method::Did.compatible_with(ManyMany));
        assert!(Method::Scm.compatible_with(OneMany));
        assert!(!Method::Scm.compatible_with(OneOne));
        assert!(Method::Dlm.compatible_with(OneNone));
        assert!(!Method::Dlm.compatible_with(ManyMany));
    }

    #[test]
    fn method_seeds_differ_across_cells() {
        let a = method_seed(7, 0, Method::Dlm);
        let b = method_seed(7, 1, Method::Dlm);
        let c = method_seed(7, 0, Method::Arimax);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, method_seed(7, 0, Method::Dlm));
    }
}

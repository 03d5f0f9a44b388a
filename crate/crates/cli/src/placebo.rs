//! Placebo intervention tests: re-run the full estimation with a fake
//! intervention time drawn strictly before the real one.
//!
//! The series is truncated just before the true intervention so the placebo
//! window contains no actual treatment effect; the estimator should then
//! find intervals that keep covering zero.

use rand::Rng;

use datekit_core::panel::{SeriesPanel, UnitSeries};
use datekit_core::rng::{role, stream};

use crate::error::CliError;
use crate::methods::{method_seed, run_method, Method, MethodOptions};

/// How placebo intervention times are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaceboRule {
    /// Uniform over `[lead, t_c - trail]`.
    Uniform { lead: usize, trail: usize },
    /// A fixed pre-treatment index.
    Fixed(usize),
}

impl Default for PlaceboRule {
    fn default() -> Self {
        PlaceboRule::Uniform {
            lead: 10,
            trail: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlaceboOptions {
    pub method: Method,
    pub rule: PlaceboRule,
    pub runs: usize,
    pub seed: u64,
    pub draws: usize,
}

impl PlaceboOptions {
    pub fn new(method: Method, runs: usize, seed: u64) -> Self {
        Self {
            method,
            rule: PlaceboRule::default(),
            runs,
            seed,
            draws: 2000,
        }
    }
}

/// One placebo re-estimation.
#[derive(Debug, Clone)]
pub struct PlaceboRun {
    pub placebo_t_c: usize,
    /// Fraction of horizons whose 95% interval contains zero.
    pub frac_zero: f64,
    /// Largest absolute effect estimate across horizons.
    pub max_abs: f64,
}

#[derive(Debug, Clone)]
pub struct PlaceboSummary {
    pub runs: Vec<PlaceboRun>,
    pub mean_frac_zero: f64,
    /// Share of runs whose intervals contain zero at >= 90% of horizons.
    pub share_mostly_null: f64,
}

fn truncate_before(panel: &SeriesPanel, placebo_t_c: usize) -> Result<SeriesPanel, CliError> {
    // Keep indices 0 .. t_c - 1 so the window holds no real treatment.
    let new_len = panel.t_c();
    let units: Vec<UnitSeries> = panel
        .units()
        .iter()
        .map(|u| UnitSeries::new(u.path[..new_len].to_vec(), u.treated))
        .collect();
    Ok(SeriesPanel::new(units, placebo_t_c, new_len - 1)?)
}

/// Runs the placebo test on a panel with a genuine intervention at
/// `panel.t_c()`.
pub fn placebo_test(
    panel: &SeriesPanel,
    opts: &PlaceboOptions,
) -> Result<PlaceboSummary, CliError> {
    let t_c = panel.t_c();
    let (lead, trail) = match opts.rule {
        PlaceboRule::Uniform { lead, trail } => (lead, trail),
        PlaceboRule::Fixed(_) => (10, 2),
    };
    if t_c < lead + trail {
        return Err(CliError::InsufficientPreHistory {
            needed: lead + trail,
            got: t_c,
        });
    }
    if let PlaceboRule::Fixed(placebo) = opts.rule {
        if placebo + trail > t_c {
            return Err(CliError::PlaceboTooLate {
                placebo,
                t_c,
                margin: trail,
            });
        }
        if placebo < lead {
            return Err(CliError::InsufficientPreHistory {
                needed: lead,
                got: placebo,
            });
        }
    }

    let mut runs = Vec::with_capacity(opts.runs);
    for run_idx in 0..opts.runs {
        let placebo_t_c = match opts.rule {
            PlaceboRule::Fixed(placebo) => placebo,
            PlaceboRule::Uniform { lead, trail } => {
                let hi = t_c - trail;
                let mut rng = stream(opts.seed, run_idx as u64, 0, role::PLACEBO);
                rng.gen_range(lead..=hi)
            }
        };
        let truncated = truncate_before(panel, placebo_t_c)?;
        let method_opts = MethodOptions {
            draws: opts.draws,
            seed: method_seed(opts.seed, run_idx as u64, opts.method),
            ..MethodOptions::new(0)
        };
        let output = run_method(opts.method, &truncated, &method_opts)?;
        let date = output.date_path();
        let band = date
            .band
            .as_ref()
            .ok_or_else(|| CliError::IntervalFreeMethod(opts.method.name().to_string()))?;
        let horizons = date.n_horizons();
        let zeros = (0..horizons)
            .filter(|&h| band.lower[h] <= 0.0 && 0.0 <= band.upper[h])
            .count();
        let max_abs = date
            .estimate
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        runs.push(PlaceboRun {
            placebo_t_c,
            frac_zero: zeros as f64 / horizons as f64,
            max_abs,
        });
    }
    let mean_frac_zero = runs.iter().map(|r| r.frac_zero).sum::<f64>() / runs.len() as f64;
    let share_mostly_null = runs.iter().filter(|r| r.frac_zero >= 0.9).count() as f64
        / runs.len() as f64;
    Ok(PlaceboSummary {
        runs,
        mean_frac_zero,
        share_mostly_null,
    })
}

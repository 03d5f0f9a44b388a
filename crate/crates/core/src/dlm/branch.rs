//! Counterfactual branching at the intervention and the effect
//! decomposition.
//!
//! For each posterior draw the model is propagated from the state at `t_c`
//! under the treated design and under the design with the indicator rows
//! zeroed. Both branches share every noise and parameter draw, so all terms
//! except the intervention response cancel in the difference:
//!
//! * lag-coefficient form: the per-draw effect follows
//!   `D_t = theta_lag_t * D_{t-1} + theta_spot_t * spot_t
//!        + theta_pers_t * pers_t + theta_trend_t * trend_t`
//!   from `D_{t_c - 1} = 0`, compounding through the fitted autoregression;
//! * literal increment form: both branches share the observed lag value, so
//!   the per-period effect is the indicator contrast
//!   `D_t = theta_spot_t * spot_t + theta_pers_t * pers_t + theta_trend_t * trend_t`.

use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};

use super::grid::{default_discount_grid, grid_search_discounts};
use super::sample::{backward_sample, DlmPosterior};
use super::{chol_or_zero, forward_filter, DlmError, DlmSpec, ObsVariance};
use super::{ContrastMode, ObservationForm};
use crate::date::{Components, DatePath};
use crate::design::{build_design, InterventionDesign};
use crate::panel::{SeriesPanel, UnitSeries};
use crate::rng::{role, stream};
use crate::stats::quantile_sorted;

/// Which indicator rows stay active when propagating a contrast.
#[derive(Clone, Copy)]
struct ActiveRows {
    spot: bool,
    persistent: bool,
    trend: bool,
}

const ALL_ROWS: ActiveRows = ActiveRows {
    spot: true,
    persistent: true,
    trend: true,
};

fn indicator_coefficients(form: ObservationForm, state: &DVector<f64>) -> (f64, f64, f64, f64) {
    // (lag, spot, persistent, trend); the intercept cancels in the contrast.
    match form {
        ObservationForm::LagCoefficient => (state[0], state[2], state[3], state[4]),
        ObservationForm::LiteralIncrement => (state[1], state[2], state[3], state[4]),
    }
}

/// Coefficient paths over `t_c ..= T` for every draw, per the contrast mode.
fn coefficient_paths(
    post: &DlmPosterior,
    t_c: usize,
    horizon: usize,
) -> Result<Vec<Vec<DVector<f64>>>, DlmError> {
    let spec = &post.spec;
    match spec.contrast {
        ContrastMode::SmoothedStates => Ok(post
            .draws
            .iter()
            .map(|d| d.states[t_c..=horizon].to_vec())
            .collect()),
        ContrastMode::SimulateForward => {
            let g = spec.evolution_matrix();
            // Evolution noise factors for t_c + 1 ..= T, shared by both
            // branches of a draw.
            let mut chols = Vec::with_capacity(horizon - t_c);
            for t in (t_c + 1)..=horizon {
                let w = post.filtered.evolution_var(spec, t);
                let reference = post.filtered.post_cov[t - 1].amax();
                chols.push(chol_or_zero(&w, reference, t)?);
            }
            let dim = spec.state_dim();
            let mut paths = Vec::with_capacity(post.draws.len());
            for (s, draw) in post.draws.iter().enumerate() {
                let mut rng = stream(post.seed, s as u64, 0, role::BRANCH);
                let mut path = Vec::with_capacity(horizon - t_c + 1);
                path.push(draw.states[t_c].clone());
                for (i, t) in ((t_c + 1)..=horizon).enumerate() {
                    // The evolution noise at t scales with sigma2_t; the
                    // filtered W_t is at the scale of s_{t-1}.
                    let scale = match spec.variance {
                        ObsVariance::Fixed(_) => 1.0,
                        ObsVariance::Learned => {
                            draw.variances[t - 1] / post.filtered.scale[t - 1]
                        }
                    };
                    let mut next = &g * path.last().unwrap();
                    if let Some(l) = &chols[i] {
                        let z = DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng));
                        next += l * z * scale.sqrt();
                    }
                    path.push(next);
                }
                paths.push(path);
            }
            Ok(paths)
        }
    }
}

fn effect_recursion(
    form: ObservationForm,
    design: &InterventionDesign,
    coefficients: &[DVector<f64>],
    t_c: usize,
    active: ActiveRows,
) -> Vec<f64> {
    let mut effects = Vec::with_capacity(coefficients.len());
    let mut prev = 0.0;
    for (i, state) in coefficients.iter().enumerate() {
        let t = t_c + i;
        let (lag_coef, spot_coef, pers_coef, trend_coef) = indicator_coefficients(form, state);
        let mut response = 0.0;
        if active.spot {
            response += spot_coef * design.spot_at(t);
        }
        if active.persistent {
            response += pers_coef * design.persistent_at(t);
        }
        if active.trend {
            response += trend_coef * design.trend_at(t);
        }
        let effect = match form {
            ObservationForm::LagCoefficient => lag_coef * prev + response,
            ObservationForm::LiteralIncrement => response,
        };
        effects.push(effect);
        prev = effect;
    }
    effects
}

fn branch_unit(panel: &SeriesPanel) -> &UnitSeries {
    panel.first_treated().unwrap_or(&panel.units()[0])
}

fn draws_for_rows(
    post: &DlmPosterior,
    panel: &SeriesPanel,
    active: ActiveRows,
) -> Result<Vec<Vec<f64>>, DlmError> {
    let design = build_design(panel, branch_unit(panel));
    let coefficient_paths = coefficient_paths(post, panel.t_c(), panel.horizon())?;
    Ok(coefficient_paths
        .iter()
        .map(|path| effect_recursion(post.spec.form, &design, path, panel.t_c(), active))
        .collect())
}

/// Per-draw effect paths, one row per posterior draw over `h = 0 ..= T - t_c`.
pub fn effect_draws(post: &DlmPosterior, panel: &SeriesPanel) -> Result<Vec<Vec<f64>>, DlmError> {
    draws_for_rows(post, panel, ALL_ROWS)
}

/// Pointwise mean and central-quantile band of a draw matrix.
pub(crate) fn date_from_draws(draws: &[Vec<f64>], level: f64) -> DatePath {
    let horizons = draws[0].len();
    let n = draws.len();
    let mut estimate = Vec::with_capacity(horizons);
    let mut lower = Vec::with_capacity(horizons);
    let mut upper = Vec::with_capacity(horizons);
    let lo_p = (1.0 - level) / 2.0;
    let hi_p = (1.0 + level) / 2.0;
    let mut column = vec![0.0; n];
    for h in 0..horizons {
        for (s, row) in draws.iter().enumerate() {
            column[s] = row[h];
        }
        let mean = column.iter().sum::<f64>() / n as f64;
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        estimate.push(mean);
        lower.push(quantile_sorted(&column, lo_p).min(mean));
        upper.push(quantile_sorted(&column, hi_p).max(mean));
    }
    DatePath::with_band(estimate, lower, upper, level).expect("quantile band is ordered")
}

/// Posterior-mean effect path with central 95% bounds and the
/// spot/persistent/trend component means attached.
pub fn branch_counterfactual(
    post: &DlmPosterior,
    panel: &SeriesPanel,
) -> Result<DatePath, DlmError> {
    let draws = effect_draws(post, panel)?;
    let mut date = date_from_draws(&draws, 0.95);
    let decomposition = decompose_effects(post, panel)?;
    date.components = Some(Components {
        spot: decomposition.spot.estimate.clone(),
        persistent: decomposition.persistent.estimate.clone(),
        trend: decomposition.trend.estimate.clone(),
    });
    Ok(date)
}

/// Effect paths with exactly one indicator row active each.
#[derive(Debug, Clone)]
pub struct EffectDecomposition {
    pub spot: DatePath,
    pub persistent: DatePath,
    pub trend: DatePath,
}

/// Per-draw spot, persistent and trend effect paths, in that order.
///
/// All three contrasts reuse the draw-level coefficient paths, so the
/// component paths sum to the total effect draw by draw.
pub fn component_draws(
    post: &DlmPosterior,
    panel: &SeriesPanel,
) -> Result<[Vec<Vec<f64>>; 3], DlmError> {
    let only = |spot, persistent, trend| ActiveRows {
        spot,
        persistent,
        trend,
    };
    Ok([
        draws_for_rows(post, panel, only(true, false, false))?,
        draws_for_rows(post, panel, only(false, true, false))?,
        draws_for_rows(post, panel, only(false, false, true))?,
    ])
}

/// Decomposes the effect by activating one indicator row at a time.
pub fn decompose_effects(
    post: &DlmPosterior,
    panel: &SeriesPanel,
) -> Result<EffectDecomposition, DlmError> {
    let [spot, persistent, trend] = component_draws(post, panel)?;
    Ok(EffectDecomposition {
        spot: date_from_draws(&spot, 0.95),
        persistent: date_from_draws(&persistent, 0.95),
        trend: date_from_draws(&trend, 0.95),
    })
}

/// Tuning of the full estimation pipeline.
#[derive(Debug, Clone)]
pub struct DlmOptions {
    pub spec: DlmSpec,
    pub grid: Vec<(f64, f64)>,
    pub draws: usize,
    pub seed: u64,
}

impl DlmOptions {
    pub fn new(seed: u64) -> Self {
        Self {
            spec: DlmSpec::intervention(ObservationForm::LagCoefficient),
            grid: default_discount_grid(),
            draws: 5000,
            seed,
        }
    }

    pub fn with_draws(mut self, draws: usize) -> Self {
        self.draws = draws;
        self
    }
}

/// A fitted model with its effect path and decomposition.
#[derive(Debug, Clone)]
pub struct DlmFit {
    pub posterior: DlmPosterior,
    pub date: DatePath,
    pub decomposition: EffectDecomposition,
    /// Per-draw effect paths for quantile summaries.
    pub effect_draws: Vec<Vec<f64>>,
}

/// Grid search, filter, backward sampling and branching for the first
/// treated series of the panel (the first unit when none is flagged).
pub fn fit_treated_series(panel: &SeriesPanel, opts: &DlmOptions) -> Result<DlmFit, DlmError> {
    let unit = branch_unit(panel);
    let design = build_design(panel, unit);
    let y = &unit.path[1..];
    let (delta, beta_v) = grid_search_discounts(y, &design, &opts.spec, &opts.grid)?;
    let spec = opts.spec.clone().with_discounts(delta, beta_v);
    let filtered = forward_filter(y, &design, &spec)?;
    let posterior = backward_sample(&filtered, &spec, opts.draws, opts.seed)?;
    let date = branch_counterfactual(&posterior, panel)?;
    let decomposition = decompose_effects(&posterior, panel)?;
    let effect_draws = effect_draws(&posterior, panel)?;
    Ok(DlmFit {
        posterior,
        date,
        decomposition,
        effect_draws,
    })
}

//! Backward sampling and smoothing.
//!
//! Sampling runs the standard backward recursion
//!
//! ```text
//! B_t = C_t G' R_{t+1}^{-1}
//! theta_t | theta_{t+1} ~ N(m_t + B_t (theta_{t+1} - a_{t+1}), C_t - B_t R_{t+1} B_t')
//! ```
//!
//! jointly with the volatility chain: precisions evolve backward as
//! `phi_t = beta_v * phi_{t+1} + Gamma((1 - beta_v) n_t / 2, n_t s_t / 2)`,
//! and each conditional state covariance is rescaled by the drawn variance
//! relative to its filtered point estimate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::filter::Filtered;
use super::{chol_or_zero, symmetrize, DlmError, DlmSpec, ObsVariance};
use crate::rng::{role, stream};

/// One joint posterior draw.
#[derive(Debug, Clone)]
pub struct StateDraw {
    /// `theta_0 ..= theta_T`.
    pub states: Vec<DVector<f64>>,
    /// Observation variances `sigma2_1 ..= sigma2_T`.
    pub variances: Vec<f64>,
}

/// Posterior draws plus the filter pass that produced them.
#[derive(Debug, Clone)]
pub struct DlmPosterior {
    pub draws: Vec<StateDraw>,
    /// `(delta, beta_v)` in effect when sampling.
    pub chosen_discounts: (f64, f64),
    /// Total one-step-ahead log predictive density of the filter pass.
    pub log_predictive: f64,
    /// Key of the sampling streams; draw `s` uses `(seed, s, 0, SAMPLER)`.
    pub seed: u64,
    pub filtered: Filtered,
    pub spec: DlmSpec,
}

impl DlmPosterior {
    pub fn n_draws(&self) -> usize {
        self.draws.len()
    }
}

struct BackwardStep {
    gain: DMatrix<f64>,
    mean_base: DVector<f64>,
    chol: Option<DMatrix<f64>>,
}

fn backward_steps(filtered: &Filtered, spec: &DlmSpec) -> Result<Vec<BackwardStep>, DlmError> {
    let g = spec.evolution_matrix();
    let horizon = filtered.len();
    let mut steps = Vec::with_capacity(horizon);
    for t in 0..horizon {
        // Conditional of theta_t given theta_{t+1}; prior arrays are indexed
        // by t+1 - 1 = t.
        let r_next = &filtered.prior_cov[t];
        let c_t = &filtered.post_cov[t];
        let r_inv = match r_next.clone().cholesky() {
            Some(chol) => chol.inverse(),
            None => {
                let mut jittered = r_next.clone();
                let bump = (0..jittered.nrows())
                    .map(|i| jittered[(i, i)].abs())
                    .fold(0.0_f64, f64::max)
                    .max(1e-300)
                    * 1e-12;
                for i in 0..jittered.nrows() {
                    jittered[(i, i)] += bump;
                }
                jittered
                    .cholesky()
                    .ok_or(DlmError::NumericalBreakdown { t: t + 1 })?
                    .inverse()
            }
        };
        let gain = c_t * g.transpose() * r_inv;
        let mut cov = c_t - &gain * r_next * gain.transpose();
        symmetrize(&mut cov);
        let chol = chol_or_zero(&cov, c_t.amax(), t)?;
        steps.push(BackwardStep {
            mean_base: filtered.post_mean[t].clone(),
            gain,
            chol,
        });
    }
    Ok(steps)
}

fn gamma_draw<R: Rng>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("gamma parameters are positive")
        .sample(rng)
}

fn normal_vec<R: Rng>(dim: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| StandardNormal.sample(rng))
}

/// Draws `n_draws` joint state and variance paths from the smoothing
/// distribution. Draw `s` is a pure function of `(seed, s)`.
pub fn backward_sample(
    filtered: &Filtered,
    spec: &DlmSpec,
    n_draws: usize,
    seed: u64,
) -> Result<DlmPosterior, DlmError> {
    let horizon = filtered.len();
    let dim = spec.state_dim();
    let steps = backward_steps(filtered, spec)?;
    let chol_last = chol_or_zero(
        &filtered.post_cov[horizon],
        filtered.post_cov[horizon].amax(),
        horizon,
    )?;
    let beta_v = spec.discount_vol;

    let mut draws = Vec::with_capacity(n_draws);
    for s in 0..n_draws {
        let mut rng = stream(seed, s as u64, 0, role::SAMPLER);
        let mut states = vec![DVector::zeros(dim); horizon + 1];
        let mut variances = vec![0.0; horizon + 1];

        // Terminal variance and state.
        let (v_last, scale_last) = match spec.variance {
            ObsVariance::Fixed(v) => (v, 1.0),
            ObsVariance::Learned => {
                let n_t = filtered.df[horizon];
                let s_t = filtered.scale[horizon];
                let phi = gamma_draw(n_t / 2.0, n_t * s_t / 2.0, &mut rng);
                (1.0 / phi, (1.0 / phi) / s_t)
            }
        };
        variances[horizon] = v_last;
        states[horizon] = &filtered.post_mean[horizon]
            + match &chol_last {
                Some(l) => l * normal_vec(dim, &mut rng) * scale_last.sqrt(),
                None => DVector::zeros(dim),
            };

        let mut phi_next = 1.0 / v_last;
        for t in (0..horizon).rev() {
            let (v_t, scale_t) = match spec.variance {
                ObsVariance::Fixed(v) => (v, 1.0),
                ObsVariance::Learned => {
                    let n_t = filtered.df[t];
                    let s_t = filtered.scale[t];
                    let phi = if beta_v >= 1.0 {
                        phi_next
                    } else {
                        beta_v * phi_next
                            + gamma_draw((1.0 - beta_v) * n_t / 2.0, n_t * s_t / 2.0, &mut rng)
                    };
                    phi_next = phi;
                    (1.0 / phi, (1.0 / phi) / s_t)
                }
            };
            variances[t] = v_t;
            let step = &steps[t];
            let innovation = &states[t + 1] - &filtered.prior_mean[t];
            let mean = &step.mean_base + &step.gain * innovation;
            states[t] = mean
                + match &step.chol {
                    Some(l) => l * normal_vec(dim, &mut rng) * scale_t.sqrt(),
                    None => DVector::zeros(dim),
                };
        }

        variances.remove(0);
        draws.push(StateDraw { states, variances });
    }

    Ok(DlmPosterior {
        draws,
        chosen_discounts: (spec.discount_state, spec.discount_vol),
        log_predictive: filtered.log_predictive,
        seed,
        filtered: filtered.clone(),
        spec: spec.clone(),
    })
}

/// Smoothed means and covariances for `theta_0 ..= theta_T`.
pub fn smooth_moments(
    filtered: &Filtered,
    spec: &DlmSpec,
) -> Result<(Vec<DVector<f64>>, Vec<DMatrix<f64>>), DlmError> {
    let horizon = filtered.len();
    let g = spec.evolution_matrix();
    let mut means = vec![DVector::zeros(spec.state_dim()); horizon + 1];
    let mut covs = vec![DMatrix::zeros(spec.state_dim(), spec.state_dim()); horizon + 1];
    means[horizon] = filtered.post_mean[horizon].clone();
    covs[horizon] = filtered.post_cov[horizon].clone();
    for t in (0..horizon).rev() {
        let r_next = &filtered.prior_cov[t];
        let r_inv = r_next
            .clone()
            .cholesky()
            .ok_or(DlmError::NumericalBreakdown { t: t + 1 })?
            .inverse();
        let gain = &filtered.post_cov[t] * g.transpose() * r_inv;
        means[t] = &filtered.post_mean[t] + &gain * (&means[t + 1] - &filtered.prior_mean[t]);
        let mut cov =
            &filtered.post_cov[t] - &gain * (r_next - &covs[t + 1]) * gain.transpose();
        symmetrize(&mut cov);
        covs[t] = cov;
    }
    Ok((means, covs))
}

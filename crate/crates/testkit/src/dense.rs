//! Brute-force joint-Gaussian oracle for small linear state-space models.
//!
//! Given explicit evolution variances, the joint law of all states and
//! observations is one big Gaussian. Filtering and smoothing moments are
//! then plain conditional-Gaussian formulas on stacked covariance blocks —
//! no recursion shared with the filter under test.

use nalgebra::{DMatrix, DVector};

/// A fully explicit linear-Gaussian model:
/// `theta_t = G theta_{t-1} + w_t`, `w_t ~ N(0, W_t)`,
/// `y_t = F_t' theta_t + e_t`, `e_t ~ N(0, v)`, `t = 1 ..= T`.
pub struct DenseModel {
    pub m0: DVector<f64>,
    pub c0: DMatrix<f64>,
    pub evolution: DMatrix<f64>,
    /// `W_1 ..= W_T`.
    pub evolution_vars: Vec<DMatrix<f64>>,
    /// `F_1 ..= F_T`.
    pub regressors: Vec<DVector<f64>>,
    pub obs_var: f64,
}

/// Conditional moments of the stacked states given observations.
pub struct DenseConditional {
    /// Mean of `theta_t` given the conditioning set, `t = 0 ..= T`.
    pub means: Vec<DVector<f64>>,
    /// Covariance of `theta_t` with itself given the conditioning set.
    pub covs: Vec<DMatrix<f64>>,
}

impl DenseModel {
    pub fn dim(&self) -> usize {
        self.m0.len()
    }

    pub fn horizon(&self) -> usize {
        self.regressors.len()
    }

    /// Joint mean and covariance of the stacked states `theta_0 ..= theta_T`.
    fn joint_states(&self) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.dim();
        let t = self.horizon();
        let dim = k * (t + 1);
        let mut mean = DVector::zeros(dim);
        let mut cov = DMatrix::zeros(dim, dim);

        // Marginal means and variances by forward propagation.
        let mut mu = self.m0.clone();
        let mut var = self.c0.clone();
        mean.rows_mut(0, k).copy_from(&mu);
        cov.view_mut((0, 0), (k, k)).copy_from(&var);
        let mut vars = vec![var.clone()];
        for s in 1..=t {
            mu = &self.evolution * mu;
            var = &self.evolution * var * self.evolution.transpose() + &self.evolution_vars[s - 1];
            mean.rows_mut(s * k, k).copy_from(&mu);
            cov.view_mut((s * k, s * k), (k, k)).copy_from(&var);
            vars.push(var.clone());
        }
        // Cross blocks: Cov(theta_u, theta_s) = G^(u-s) Var(theta_s), u > s.
        for s in 0..=t {
            let mut cross = vars[s].clone();
            for u in (s + 1)..=t {
                cross = &self.evolution * cross;
                cov.view_mut((u * k, s * k), (k, k)).copy_from(&cross);
                cov.view_mut((s * k, u * k), (k, k))
                    .copy_from(&cross.transpose());
            }
        }
        (mean, cov)
    }

    /// Moments of every state given the first `n_obs` observations.
    pub fn conditional(&self, y: &[f64], n_obs: usize) -> DenseConditional {
        let k = self.dim();
        let t = self.horizon();
        assert!(n_obs <= t && y.len() >= n_obs);
        let (state_mean, state_cov) = self.joint_states();

        // Observation loadings: y = H theta + e.
        let mut h = DMatrix::zeros(n_obs, k * (t + 1));
        for i in 0..n_obs {
            let time = i + 1;
            for j in 0..k {
                h[(i, time * k + j)] = self.regressors[i][j];
            }
        }
        let y_mean = &h * &state_mean;
        let mut y_cov = &h * &state_cov * h.transpose();
        for i in 0..n_obs {
            y_cov[(i, i)] += self.obs_var;
        }
        let cross = &state_cov * h.transpose();
        let y_vec = DVector::from_fn(n_obs, |i, _| y[i]);
        let innovation = y_vec - y_mean;
        let solve = y_cov
            .clone()
            .cholesky()
            .expect("observation covariance is positive definite");
        let weighted = solve.solve(&innovation);
        let cond_mean_all = &state_mean + &cross * weighted;
        let gain = solve.solve(&cross.transpose());
        let cond_cov_all = &state_cov - &cross * gain;

        let mut means = Vec::with_capacity(t + 1);
        let mut covs = Vec::with_capacity(t + 1);
        for s in 0..=t {
            means.push(cond_mean_all.rows(s * k, k).into_owned());
            covs.push(cond_cov_all.view((s * k, s * k), (k, k)).into_owned());
        }
        DenseConditional { means, covs }
    }
}

//! Ordinary least squares with structural zero-column handling.

use nalgebra::{DMatrix, DVector};

use super::BaselineError;

/// Relative singular-value cutoff for rank detection.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug)]
pub struct OlsFit {
    /// Coefficients in the original column order; structurally zero columns
    /// get a zero coefficient.
    pub beta: Vec<f64>,
    /// Coefficient covariance, zero in rows/columns of dropped regressors.
    pub covariance: DMatrix<f64>,
    pub residual_variance: f64,
}

/// Fits `y ~ X` by least squares.
///
/// All-zero columns (a control unit's indicator rows) are dropped and get
/// coefficient zero with zero variance; genuine collinearity among the
/// remaining columns is an error.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit, BaselineError> {
    let n = x.nrows();
    let p_all = x.ncols();
    let keep: Vec<usize> = (0..p_all)
        .filter(|&j| x.column(j).iter().any(|&v| v != 0.0))
        .collect();
    let p = keep.len();
    if n <= p {
        return Err(BaselineError::TooFewObservations {
            needed: p + 1,
            got: n,
        });
    }
    let xk = DMatrix::from_fn(n, p, |i, j| x[(i, keep[j])]);

    let svd = xk.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if svd
        .singular_values
        .iter()
        .any(|&s| s <= max_sv * RANK_TOL)
        || max_sv == 0.0
    {
        return Err(BaselineError::RankDeficient);
    }

    let xtx = xk.transpose() * &xk;
    let xty = xk.transpose() * y;
    let chol = xtx.cholesky().ok_or(BaselineError::RankDeficient)?;
    let beta_k = chol.solve(&xty);
    let fitted = &xk * &beta_k;
    let residuals = y - fitted;
    let dof = (n - p).max(1) as f64;
    let sigma2 = residuals.dot(&residuals) / dof;
    let cov_k = chol.inverse() * sigma2;

    let mut beta = vec![0.0; p_all];
    let mut covariance = DMatrix::zeros(p_all, p_all);
    for (a, &ja) in keep.iter().enumerate() {
        beta[ja] = beta_k[a];
        for (b, &jb) in keep.iter().enumerate() {
            covariance[(ja, jb)] = cov_k[(a, b)];
        }
    }
    Ok(OlsFit {
        beta,
        covariance,
        residual_variance: sigma2,
    })
}

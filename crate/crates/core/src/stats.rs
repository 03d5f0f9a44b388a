//! Small numeric helpers shared across estimators.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}

/// Two-sided critical value for a central interval at `level`.
pub fn z_for_level(level: f64) -> f64 {
    normal_quantile(0.5 + level / 2.0)
}

/// Log density of a scaled Student-t: `x ~ t_df(loc, scale2)` where `scale2`
/// is the squared scale.
pub fn student_t_logpdf(x: f64, df: f64, loc: f64, scale2: f64) -> f64 {
    let z2 = (x - loc) * (x - loc) / scale2;
    ln_gamma((df + 1.0) / 2.0)
        - ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI * scale2).ln()
        - 0.5 * (df + 1.0) * (1.0 + z2 / df).ln()
}

/// Log density of `x ~ N(loc, var)`.
pub fn normal_logpdf(x: f64, loc: f64, var: f64) -> f64 {
    let z2 = (x - loc) * (x - loc) / var;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + z2)
}

/// Linearly interpolated empirical quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let p = p.clamp(0.0, 1.0);
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = pos - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Sample mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance.
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_quantile_matches_tabled_values() {
        assert!((z_for_level(0.95) - 1.959964).abs() < 1e-5);
        assert!((normal_quantile(0.5)).abs() < 1e-12);
    }

    #[test]
    fn student_t_approaches_normal_for_large_df() {
        let t = student_t_logpdf(0.7, 1e7, 0.0, 1.0);
        let n = normal_logpdf(0.7, 0.0, 1.0);
        assert!((t - n).abs() < 1e-5);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
        assert!((quantile_sorted(&v, 0.5) - 2.5).abs() < 1e-12);
    }
}

//! Adaptive Simpson quadrature and Beta-density moments used as oracles.

/// Adaptive Simpson integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        let m = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth - 1)
                + recurse(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    let whole = simpson(&f, a, b);
    recurse(&f, a, b, whole, tol, 48)
}

fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation, g = 7.
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let mut acc = COEFFS[0];
        for (i, &c) in COEFFS.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
    }
}

/// `E[log X]` for `X ~ Beta(a, b)`, by quadrature of the log against the
/// density.
pub fn beta_log_moment(a: f64, b: f64) -> f64 {
    let log_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let density = move |x: f64| (log_norm + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()).exp();
    // The integrand vanishes fast enough at both ends for a, b > 1.
    integrate(move |x| x.ln() * density(x), 1e-12, 1.0 - 1e-12, 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let value = integrate(|x| x * x, 0.0, 3.0, 1e-12);
        assert!((value - 9.0).abs() < 1e-9);
    }

    #[test]
    fn uniform_log_moment_is_minus_one() {
        // Beta(1, 1) is uniform; E[log X] = -1.
        assert!((beta_log_moment(1.0, 1.0) + 1.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_beta_checks_against_harmonic_form() {
        // For integer a, b: E[log X] = H_{a+b-1} - H_{a-1} with digamma
        // telescoping; Beta(2, 1): E[log X] = -1/2.
        assert!((beta_log_moment(2.0, 1.0) + 0.5).abs() < 1e-8);
    }
}

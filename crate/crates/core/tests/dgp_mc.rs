//! Distributional checks of the data-generating process against independent
//! oracles: quadrature for the volatility log-moments, a two-sample KS test
//! for pre-treatment arm symmetry, and the closed-form effect path for the
//! paired-arm Monte Carlo mean.

use datekit_core::config::{ScenarioConfig, ScenarioKind};
use datekit_core::dgp::{simulate_potential_pair, simulate_scenario, simulate_volatility};
use datekit_core::oracle::true_date_oracle;
use datekit_core::rng::{role, stream};
use datekit_testkit::{ks, mean, quad, standard_error};

fn paper_cfg(kind: ScenarioKind, horizon: usize, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(kind, horizon, seed);
    cfg.ar_coef = 0.8;
    cfg
}

#[test]
fn volatility_log_ratios_match_the_quadrature_moment() {
    // log(sigma2_t / sigma2_{t-1}) = log(beta) - log(eta_t); the mean of the
    // log-ratio at fixed t is log(beta) - E[log eta_t], with the Beta
    // log-moment given by quadrature.
    let cfg = paper_cfg(ScenarioKind::OneNone, 72, 5);
    let beta = cfg.vol_discount;
    let draws = 100_000;

    for &t in &[1usize, 36, 72] {
        let df = (t as f64 + cfg.horizon as f64 / 2.0) / 2.0;
        let expected = beta.ln() - quad::beta_log_moment(beta * df, (1.0 - beta) * df);
        let mut ratios = Vec::with_capacity(draws);
        for rep in 0..draws {
            let mut rng = stream(cfg.seed, rep as u64, t as u64, role::VOLATILITY);
            let vol = simulate_volatility(&cfg, &mut rng).unwrap();
            let ratio = if t == 1 {
                (vol.sigma2[0] / cfg.sigma2_0).ln()
            } else {
                (vol.sigma2[t - 1] / vol.sigma2[t - 2]).ln()
            };
            ratios.push(ratio);
        }
        let got = mean(&ratios);
        let se = standard_error(&ratios);
        assert!(
            (got - expected).abs() < 4.0 * se,
            "t = {t}: sample {got:.6} vs quadrature {expected:.6} (se {se:.2e})"
        );
    }
}

#[test]
fn treated_and_control_arms_agree_before_the_intervention() {
    // With the treatment branch never taken (values inspected at t_c - 1),
    // both simulators must produce identically distributed outcomes.
    let cfg = paper_cfg(ScenarioKind::OneNone, 40, 31);
    let n = 10_000;
    let mut treated_values = Vec::with_capacity(n);
    let mut control_values = Vec::with_capacity(n);
    for rep in 0..n {
        let mut vol_rng = stream(cfg.seed, rep as u64, 0, role::VOLATILITY);
        let vol = simulate_volatility(&cfg, &mut vol_rng).unwrap();
        let mut noise_rng = stream(cfg.seed, rep as u64, 0, role::NOISE);
        let unit = datekit_core::dgp::simulate_unit(&cfg, true, &vol, &mut noise_rng);
        treated_values.push(unit.path[cfg.t_c - 1]);

        let mut vol_rng = stream(cfg.seed, rep as u64, 1, role::VOLATILITY);
        let vol = simulate_volatility(&cfg, &mut vol_rng).unwrap();
        let mut noise_rng = stream(cfg.seed, rep as u64, 1, role::NOISE);
        let unit = datekit_core::dgp::simulate_unit(&cfg, false, &vol, &mut noise_rng);
        control_values.push(unit.path[cfg.t_c - 1]);
    }
    let (d, p) = ks::two_sample(&treated_values, &control_values);
    assert!(p > 0.01, "KS statistic {d:.4} with p = {p:.4}");
}

#[test]
fn paired_arm_monte_carlo_mean_matches_the_oracle() {
    let cfg = paper_cfg(ScenarioKind::OneNone, 48, 17);
    let truth = true_date_oracle(&cfg).unwrap();
    let n = 4000;
    let horizons = cfg.n_horizons();
    let mut diffs = vec![Vec::with_capacity(n); horizons];
    for rep in 0..n {
        let mut vol_rng = stream(cfg.seed, rep as u64, 0, role::VOLATILITY);
        let vol = simulate_volatility(&cfg, &mut vol_rng).unwrap();
        let mut noise_rng = stream(cfg.seed, rep as u64, 0, role::NOISE);
        let (treated, control) = simulate_potential_pair(&cfg, &vol, &mut noise_rng);
        for h in 0..horizons {
            diffs[h].push(treated.path[cfg.t_c + h] - control.path[cfg.t_c + h]);
        }
    }
    for h in 0..horizons {
        let got = mean(&diffs[h]);
        let se = standard_error(&diffs[h]).max(1e-12);
        assert!(
            (got - truth.estimate[h]).abs() < 3.0 * se.max(1e-9),
            "h = {h}: {got:.6} vs {:.6} (se {se:.2e})",
            truth.estimate[h]
        );
    }
}

#[test]
fn many_many_panel_mean_tracks_the_oracle() {
    // Arm-mean differences across replications center on the oracle path.
    let cfg = paper_cfg(ScenarioKind::ManyMany, 24, 23);
    let truth = true_date_oracle(&cfg).unwrap();
    let reps = 400;
    let horizons = cfg.n_horizons();
    let mut taus = vec![Vec::with_capacity(reps); horizons];
    for rep in 0..reps {
        let sim = simulate_scenario(&cfg, rep as u64).unwrap();
        for h in 0..horizons {
            let t = cfg.t_c + h;
            let m1 = mean(
                &sim.panel
                    .treated_units()
                    .map(|u| u.path[t])
                    .collect::<Vec<_>>(),
            );
            let m0 = mean(
                &sim.panel
                    .control_units()
                    .map(|u| u.path[t])
                    .collect::<Vec<_>>(),
            );
            taus[h].push(m1 - m0);
        }
    }
    for h in 0..horizons {
        let got = mean(&taus[h]);
        let se = standard_error(&taus[h]);
        assert!(
            (got - truth.estimate[h]).abs() < 4.0 * se,
            "h = {h}: {got:.5} vs {:.5}",
            truth.estimate[h]
        );
    }
}

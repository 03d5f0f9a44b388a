use datekit_core::config::{ScenarioConfig, ScenarioKind};
use datekit_core::dgp::simulate_scenario;
use datekit_core::dlm::{fit_treated_series, DlmOptions, ContrastMode, ObservationForm, DlmSpec};
use datekit_core::oracle::true_date_oracle;
use datekit_core::eval::{quantile_coverage_curve, IntervalFamily};

#[test]
#[ignore]
fn probe() {
    let mut cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 72, 5005);
    cfg.ar_coef = 0.8;
    let truth = true_date_oracle(&cfg).unwrap();
    let reps = 150;
    let horizons = truth.estimate.len();

    for form in [ObservationForm::LagCoefficient] {
        for grid in [vec![(0.999, 0.999)], vec![(0.999, 0.95)], vec![(0.99, 0.99)], vec![(0.99, 0.95)], vec![(0.95, 0.95)], datekit_core::dlm::default_discount_grid()] {
            let gname = if grid.len() == 1 { format!("{:?}", grid[0]) } else { "search".to_string() };
            let mut mse_sum = 0.0;
            let (mut hits, mut total) = (0usize, 0usize);
            let mut fams: Vec<IntervalFamily> = Vec::new();
            let mut mean_est = vec![0.0; horizons];
            for rep in 0..reps {
                let sim = simulate_scenario(&cfg, rep as u64).unwrap();
                let mut opts = DlmOptions::new(4000 + rep as u64).with_draws(800);
                opts.spec = DlmSpec::intervention(form);
                opts.spec.contrast = ContrastMode::SmoothedStates;
                opts.grid = grid.clone();
                let fit = fit_treated_series(&sim.panel, &opts).unwrap();
                let band = fit.date.band.as_ref().unwrap();
                for h in 0..horizons {
                    let e = fit.date.estimate[h] - truth.estimate[h];
                    mse_sum += e * e;
                    mean_est[h] += fit.date.estimate[h] / reps as f64;
                    if band.lower[h] <= truth.estimate[h] && truth.estimate[h] <= band.upper[h] { hits += 1; }
                    total += 1;
                }
                fams.push(IntervalFamily::Draws(fit.effect_draws));
            }
            let curve = quantile_coverage_curve(&fams, &truth, &[0.25, 0.5, 0.75, 0.95]).unwrap();
            let bias2: f64 = (0..horizons).map(|h| { let b = mean_est[h] - truth.estimate[h]; b * b }).sum::<f64>() / horizons as f64;
            println!("== {form:?}/{gname}: mse {:.5} (bias2 {:.5}) cp95 {:.3} curve {:?}",
                mse_sum / total as f64, bias2, hits as f64 / total as f64,
                curve.iter().map(|(k, p)| format!("q{k}={:.1}%", 100.0 * p.coverage)).collect::<Vec<_>>());
        }
    }
}

use datekit_core::config::{ScenarioConfig, ScenarioKind};
use datekit_core::dgp::simulate_scenario;
use datekit_core::dlm::*;
use datekit_core::design::build_design;

#[test]
#[ignore]
fn probe() {
    let mut cfg = ScenarioConfig::preset(ScenarioKind::OneNone, 72, 5005);
    cfg.ar_coef = 0.8;
    let sim = simulate_scenario(&cfg, 0).unwrap();
    let unit = sim.panel.first_treated().unwrap();
    let design = build_design(&sim.panel, unit);
    let spec = DlmSpec::intervention(ObservationForm::LagCoefficient).with_discounts(0.999, 0.999);
    let filtered = forward_filter(&unit.path[1..], &design, &spec).unwrap();
    println!("posterior mean at T: {:?}", filtered.post_mean[72].as_slice());
    println!("posterior mean at t_c: {:?}", filtered.post_mean[37].as_slice());
    println!("C diag at t_c: {:?}", (0..5).map(|i| filtered.post_cov[37][(i,i)]).collect::<Vec<_>>());
    println!("s at t_c: {}, n at t_c: {}", filtered.scale[37], filtered.df[37]);
    // W at a few times
    for t in [38usize, 50, 72] {
        let w = filtered.evolution_var(&spec, t);
        println!("W diag at {t}: {:?}", (0..5).map(|i| w[(i,i)]).collect::<Vec<_>>());
    }
    let post = backward_sample(&filtered, &spec, 200, 9).unwrap();
    // max |lag coef| across draws/times
    let mut max_lag: f64 = 0.0;
    let mut max_v: f64 = 0.0;
    for d in &post.draws {
        for s in &d.states { max_lag = max_lag.max(s[0].abs()); }
        for &v in &d.variances { max_v = max_v.max(v); }
    }
    println!("max |beta_lag| across smoothed draws: {max_lag:.3}, max sigma2 draw: {max_v:.4}");
    let draws = effect_draws(&post, &sim.panel).unwrap();
    let mut max_d: f64 = 0.0;
    for row in &draws { for &v in row { max_d = max_d.max(v.abs()); } }
    println!("max |DATE draw| (forward): {max_d:.3}");
}

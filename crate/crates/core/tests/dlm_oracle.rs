//! Filtering, smoothing and backward sampling checked against a dense
//! joint-Gaussian oracle on small fixed-variance models. The oracle stacks
//! all states into one Gaussian and conditions by direct matrix algebra; it
//! shares no recursion with the code under test.

use datekit_core::dlm::{
    backward_sample, filter_regressors, smooth_moments, DlmSpec, ObsVariance, ObservationForm,
};
use nalgebra::{DMatrix, DVector};

use datekit_testkit::dense::DenseModel;

struct Toy {
    spec: DlmSpec,
    targets: Vec<f64>,
    rows: Vec<DVector<f64>>,
}

fn toy(dim: usize, delta: f64, obs_var: f64, horizon: usize) -> Toy {
    let mut spec = DlmSpec::intervention(ObservationForm::LagCoefficient);
    spec.prior_mean = DVector::from_fn(dim, |i, _| 0.3 - 0.2 * i as f64);
    spec.prior_scale = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            1.5 - 0.3 * i as f64
        } else {
            0.2
        }
    });
    spec.variance = ObsVariance::Fixed(obs_var);
    spec.discount_state = delta;
    spec.discount_vol = 1.0;
    // A mildly contracting evolution keeps the toy general (not identity).
    spec.evolution = Some(DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            0.9
        } else if i + 1 == j {
            0.1
        } else {
            0.0
        }
    }));
    let targets: Vec<f64> = (0..horizon)
        .map(|t| 0.4 * ((t as f64) * 0.9).sin() + 0.1 * t as f64)
        .collect();
    let rows: Vec<DVector<f64>> = (0..horizon)
        .map(|t| DVector::from_fn(dim, |i, _| if i == 0 { 1.0 } else { ((t + i) as f64 * 0.7).cos() }))
        .collect();
    Toy {
        spec,
        targets,
        rows,
    }
}

/// Dense oracle with the evolution variances implied by the discount filter.
fn dense_of(toy: &Toy) -> DenseModel {
    let filtered = filter_regressors(&toy.targets, &toy.rows, &toy.spec).unwrap();
    let evolution_vars: Vec<DMatrix<f64>> = (1..=toy.targets.len())
        .map(|t| filtered.evolution_var(&toy.spec, t))
        .collect();
    let obs_var = match toy.spec.variance {
        ObsVariance::Fixed(v) => v,
        ObsVariance::Learned => unreachable!(),
    };
    DenseModel {
        m0: toy.spec.prior_mean.clone(),
        c0: toy.spec.prior_scale.clone(),
        evolution: toy.spec.evolution_matrix(),
        evolution_vars,
        regressors: toy.rows.clone(),
        obs_var,
    }
}

fn max_rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

#[test]
fn filtered_moments_match_dense_conditionals() {
    for (dim, delta) in [(1usize, 1.0), (1, 0.9), (2, 1.0), (2, 0.85)] {
        let toy = toy(dim, delta, 0.3, 5);
        let filtered = filter_regressors(&toy.targets, &toy.rows, &toy.spec).unwrap();
        let dense = dense_of(&toy);
        for t in 1..=5 {
            let cond = dense.conditional(&toy.targets, t);
            for i in 0..dim {
                assert!(
                    max_rel_err(filtered.post_mean[t][i], cond.means[t][i]) < 1e-8,
                    "dim {dim} delta {delta} t {t}: mean {} vs {}",
                    filtered.post_mean[t][i],
                    cond.means[t][i]
                );
                for j in 0..dim {
                    assert!(
                        max_rel_err(filtered.post_cov[t][(i, j)], cond.covs[t][(i, j)]) < 1e-8,
                        "dim {dim} delta {delta} t {t}: cov ({i},{j})"
                    );
                }
            }
        }
    }
}

#[test]
fn smoothed_moments_match_dense_conditionals() {
    for (dim, delta) in [(1usize, 0.9), (2, 0.85)] {
        let toy = toy(dim, delta, 0.25, 5);
        let filtered = filter_regressors(&toy.targets, &toy.rows, &toy.spec).unwrap();
        let (means, covs) = smooth_moments(&filtered, &toy.spec).unwrap();
        let dense = dense_of(&toy);
        let cond = dense.conditional(&toy.targets, 5);
        for t in 0..=5 {
            for i in 0..dim {
                assert!(
                    max_rel_err(means[t][i], cond.means[t][i]) < 1e-8,
                    "t {t} i {i}: {} vs {}",
                    means[t][i],
                    cond.means[t][i]
                );
                for j in 0..dim {
                    assert!(
                        max_rel_err(covs[t][(i, j)], cond.covs[t][(i, j)]) < 1e-8,
                        "t {t} ({i},{j})"
                    );
                }
            }
        }
    }
}

#[test]
fn spec_toy_case_single_state_three_steps() {
    // T = 3, one-dimensional state, hand-chosen prior and fixed variance.
    let mut spec = DlmSpec::intervention(ObservationForm::LagCoefficient);
    spec.prior_mean = DVector::from_vec(vec![0.5]);
    spec.prior_scale = DMatrix::from_element(1, 1, 2.0);
    spec.variance = ObsVariance::Fixed(0.4);
    spec.discount_state = 0.95;
    spec.discount_vol = 1.0;
    let targets = vec![0.8, 0.2, 0.9];
    let rows = vec![
        DVector::from_vec(vec![1.0]),
        DVector::from_vec(vec![0.5]),
        DVector::from_vec(vec![1.5]),
    ];
    let filtered = filter_regressors(&targets, &rows, &spec).unwrap();
    let dense = DenseModel {
        m0: spec.prior_mean.clone(),
        c0: spec.prior_scale.clone(),
        evolution: spec.evolution_matrix(),
        evolution_vars: (1..=3).map(|t| filtered.evolution_var(&spec, t)).collect(),
        regressors: rows.clone(),
        obs_var: 0.4,
    };
    for t in 1..=3 {
        let cond = dense.conditional(&targets, t);
        assert!(max_rel_err(filtered.post_mean[t][0], cond.means[t][0]) < 1e-10);
        assert!(max_rel_err(filtered.post_cov[t][(0, 0)], cond.covs[t][(0, 0)]) < 1e-10);
    }
}

#[test]
fn backward_samples_reproduce_smoothing_moments() {
    let toy = toy(2, 0.9, 0.3, 3);
    let filtered = filter_regressors(&toy.targets, &toy.rows, &toy.spec).unwrap();
    let n_draws = 100_000;
    let posterior = backward_sample(&filtered, &toy.spec, n_draws, 99).unwrap();
    let dense = dense_of(&toy);
    let cond = dense.conditional(&toy.targets, 3);

    for t in 0..=3 {
        for i in 0..2 {
            let values: Vec<f64> = posterior.draws.iter().map(|d| d.states[t][i]).collect();
            let sample_mean = datekit_testkit::mean(&values);
            let sample_var = datekit_testkit::variance(&values);
            let rel_mean = (sample_mean - cond.means[t][i]).abs()
                / cond.covs[t][(i, i)].sqrt().max(1e-6);
            // Mean error is measured in posterior standard deviations; with
            // 1e5 draws, 1% of one standard deviation allows ~3 sigma of MC
            // noise.
            assert!(
                rel_mean < 0.012,
                "t {t} i {i}: mean off by {rel_mean:.4} sd"
            );
            let rel_var = (sample_var - cond.covs[t][(i, i)]).abs() / cond.covs[t][(i, i)];
            assert!(rel_var < 0.015, "t {t} i {i}: var off by {rel_var:.4}");
        }
    }
}

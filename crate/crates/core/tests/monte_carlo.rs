//! Sampling-distribution shapes and test power from small simulation studies.

use drmean_core::dgp::{generate_sample, DgpConfig};
use drmean_core::mc::{density_points, quantile_sorted, run_scenario, Bandwidth};
use drmean_core::rng::derive_seed;
use drmean_core::sensitivity::{analyze, ModelSpec};
use drmean_core::{EstimatorName, ScenarioSpec};
use drmean_core::linmod::{Link, PropensityMethod};

#[test]
fn ht_is_right_skewed_under_correct_propensity() {
    let spec = ScenarioSpec {
        n: 200,
        reps: 500,
        pi_model_correct: true,
        m_model_correct: true,
        reverse: false,
        base_seed: 21,
        estimators: vec![EstimatorName::Ht],
    };
    let s = run_scenario(&spec, &DgpConfig::default(), 2).unwrap();
    let row = s.row(EstimatorName::Ht).unwrap();
    assert!(row.skewness > 0.0, "skewness {}", row.skewness);
    let q = row.quantiles;
    assert!(q[6] - q[3] > q[3] - q[0], "{q:?}");

    let mut v = s.values(EstimatorName::Ht);
    let d = density_points(&v, Bandwidth::Auto, None).unwrap();
    assert!((d.integral() - 1.0).abs() < 0.01);
    v.sort_by(f64::total_cmp);
    assert_eq!(quantile_sorted(&v, 0.5), q[3]);
}

fn rejection_rate(n: usize, datasets: usize) -> f64 {
    let ps = [
        ModelSpec::Propensity {
            covariates: vec![4, 5, 6, 7],
            method: PropensityMethod::Logistic,
        },
        ModelSpec::Propensity {
            covariates: vec![0, 1, 2, 3],
            method: PropensityMethod::Logistic,
        },
    ];
    let os = [ModelSpec::Outcome {
        covariates: vec![4, 5, 6, 7],
        link: Link::Identity,
    }];
    let mut rejected = 0;
    for d in 0..datasets {
        let data = generate_sample(n, derive_seed(n as u64, d as u64), &DgpConfig::default())
            .unwrap()
            .to_dataset();
        let m = analyze(&data, &ps, &os, EstimatorName::DrWls, 100, d as u64).unwrap();
        assert!((0.0..=1.0).contains(&m.col_p_values[0]));
        if m.col_p_values[0] < 0.05 {
            rejected += 1;
        }
    }
    rejected as f64 / datasets as f64
}

#[test]
fn homogeneity_power_rises_with_n() {
    let small = rejection_rate(200, 20);
    let large = rejection_rate(1000, 20);
    assert!(large > small, "rejection {small} at n = 200, {large} at n = 1000");
    assert!(large >= 0.5, "rejection {large} at n = 1000");
}

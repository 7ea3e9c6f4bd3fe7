use dcmax::experiments::*;
use dcmax_core::rng::Stream;
use dcmax_core::{build_phase_retrieval_model, build_piecewise_affine_model, LossKind, MMConfig, PhasePopulation};
use proptest::prelude::*;

fn spec(seed: u64, signal: Vec<f64>, sigma: f64, n: usize) -> GeneratorSpec {
    GeneratorSpec { seed, stream: 0, signal, sigma, n }
}

fn small_experiment(p: usize, sigma: f64, sizes: Vec<usize>, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        signal: vec![1.0; p],
        sigma,
        sample_sizes: sizes,
        replications: reps,
        base_seed: 7,
        loss: LossKind::Squared,
        radius: None,
        start: StartPoint::Saddle,
        solver: MMConfig::default(),
    }
}

#[test]
fn features_are_unit_norm_and_noiseless_responses_exact() {
    let signal = vec![1.0, -2.0, 0.5];
    let data = generate_phase_dataset(&spec(1, signal.clone(), 0.0, 500)).unwrap();
    for (xi, z) in data.samples() {
        let n: f64 = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() <= 1e-12);
        let clean: f64 = xi.iter().zip(&signal).map(|(a, b)| a * b).sum::<f64>().abs();
        assert_eq!(z, clean);
    }
}

#[test]
fn generation_is_deterministic_and_streams_differ() {
    let a = generate_phase_dataset(&spec(3, vec![1.0; 4], 0.1, 50)).unwrap();
    let b = generate_phase_dataset(&spec(3, vec![1.0; 4], 0.1, 50)).unwrap();
    assert_eq!(a, b);
    let c = generate_phase_dataset(&GeneratorSpec { stream: 1, ..spec(3, vec![1.0; 4], 0.1, 50) }).unwrap();
    assert_ne!(a.responses(), c.responses());
}

#[test]
fn noise_variance_concentrates() {
    let signal = vec![1.0; 5];
    let data = generate_phase_dataset(&spec(4, signal.clone(), 0.1, 100_000)).unwrap();
    let noise: Vec<f64> = data
        .samples()
        .map(|(xi, z)| z - xi.iter().zip(&signal).map(|(a, b)| a * b).sum::<f64>().abs())
        .collect();
    let mean = noise.iter().sum::<f64>() / noise.len() as f64;
    let var = noise.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (noise.len() - 1) as f64;
    assert!((0.0085..=0.0115).contains(&var), "{var}");
}

#[test]
fn sphere_draws_have_isotropic_moments() {
    let p = 6;
    let data = generate_phase_dataset(&spec(5, vec![1.0; p], 0.0, 100_000)).unwrap();
    let mut mean = vec![0.0; p];
    let mut diag = vec![0.0; p];
    for (xi, _) in data.samples() {
        for i in 0..p {
            mean[i] += xi[i];
            diag[i] += xi[i] * xi[i];
        }
    }
    let n = data.len() as f64;
    let mean_norm = mean.iter().map(|m| (m / n).powi(2)).sum::<f64>().sqrt();
    assert!(mean_norm <= 0.02, "{mean_norm}");
    for d in diag {
        assert!((d / n - 1.0 / p as f64).abs() <= 0.01);
    }
}

#[test]
fn generator_rejects_bad_specs() {
    assert!(generate_phase_dataset(&spec(0, vec![1.0], 0.1, 5)).is_err());
    assert!(generate_phase_dataset(&spec(0, vec![0.0, 0.0], 0.1, 5)).is_err());
    assert!(generate_phase_dataset(&spec(0, vec![1.0, 1.0], -1.0, 5)).is_err());
    assert!(generate_phase_dataset(&spec(0, vec![1.0, 1.0], 0.1, 0)).is_err());
}

#[test]
fn monte_carlo_risk_agrees_with_the_closed_form() {
    let signal = vec![1.0; 4];
    let model = build_phase_retrieval_model(4).unwrap();
    let exact = population_risk_mc(&model, LossKind::Squared, &signal, 0.0, &signal, 1000, 1).unwrap();
    assert_eq!((exact.estimate, exact.standard_error), (0.0, 0.0));

    let at_signal = population_risk_mc(&model, LossKind::Squared, &signal, 0.1, &signal, 100_000, 2).unwrap();
    assert!((at_signal.estimate - 0.01).abs() <= 4.0 * at_signal.standard_error);

    let pop = PhasePopulation::new(signal.clone(), 0.1).unwrap();
    let mut rng = Stream::new(3, 0);
    for k in 0..5 {
        let mut x = vec![0.0; 4];
        rng.fill_normal(&mut x);
        let mc = population_risk_mc(&model, LossKind::Squared, &signal, 0.1, &x, 100_000, 10 + k).unwrap();
        let closed = pop.population_risk(&x).unwrap();
        assert!((mc.estimate - closed).abs() <= 4.0 * mc.standard_error, "{mc:?} vs {closed}");
    }
    assert!(population_risk_mc(&model, LossKind::Squared, &signal, 0.1, &signal, 99, 0).is_err());
}

#[test]
fn monte_carlo_accepts_other_models_of_matching_dimension() {
    let model = build_piecewise_affine_model(1, 1, 3).unwrap();
    let x = vec![0.0; model.param_dim];
    let mc = population_risk_mc(&model, LossKind::Absolute, &[1.0, 0.0, 0.0], 0.0, &x, 1000, 4).unwrap();
    assert!(mc.estimate > 0.0 && mc.standard_error > 0.0);
    let wrong = build_piecewise_affine_model(1, 1, 2).unwrap();
    assert!(population_risk_mc(&wrong, LossKind::Absolute, &[1.0, 0.0, 0.0], 0.0, &x, 1000, 4).is_err());
}

#[test]
fn variance_estimator_examples() {
    let model = build_phase_retrieval_model(2).unwrap();
    let data = dcmax_core::Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap();
    assert_eq!(variance_estimator(&model, LossKind::Squared, &data, &[1.0, 1.0]).unwrap(), 0.0);
    let split = dcmax_core::Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0 + 2f64.sqrt()]).unwrap();
    assert!((variance_estimator(&model, LossKind::Squared, &split, &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
    let one = dcmax_core::Dataset::from_rows(&[vec![1.0, 0.0]], vec![1.0]).unwrap();
    assert!(variance_estimator(&model, LossKind::Squared, &one, &[1.0, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn variance_estimator_matches_two_pass_formula(seed in 0u64..1000, x in prop::collection::vec(-2.0f64..2.0, 3)) {
        let model = build_phase_retrieval_model(3).unwrap();
        let data = generate_phase_dataset(&spec(seed, vec![1.0, 0.5, -1.0], 0.2, 40)).unwrap();
        let losses: Vec<f64> = data
            .samples()
            .map(|(xi, z)| (z - xi.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>().abs()).powi(2))
            .collect();
        let mean = losses.iter().sum::<f64>() / 40.0;
        let naive = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / 40.0;
        let v = variance_estimator(&model, LossKind::Squared, &data, &x).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!((v - naive).abs() <= 1e-12 * (1.0 + naive));
    }

    #[test]
    fn saddle_starts_lie_on_the_circle(seed in 0u64..1000, p in 2usize..8) {
        let signal: Vec<f64> = (0..p).map(|i| 1.0 + i as f64).collect();
        let x = saddle_start(&signal, &mut Stream::new(seed, 0));
        let ns: f64 = signal.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let c: f64 = x.iter().zip(&signal).map(|(a, b)| a * b).sum();
        prop_assert!(c.abs() <= 1e-10 * ns * nx);
        prop_assert!((nx - 2.0 / std::f64::consts::PI * ns).abs() <= 1e-12 * ns);
    }

    #[test]
    fn distance_and_angle_laws(x in prop::collection::vec(-3.0f64..3.0, 4)) {
        let signal = [1.0, -1.0, 0.5, 2.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert_eq!(distance_to_solutions(&x, &signal), distance_to_solutions(&neg, &signal));
        prop_assert!(distance_to_solutions(&x, &signal) >= 0.0);
        let a = angle_to_signal(&x, &signal);
        prop_assert!((0.0..=std::f64::consts::PI).contains(&a));
        prop_assert!((a + angle_to_signal(&neg, &signal) - std::f64::consts::PI).abs() <= 1e-12);
        let near = nearest_solution(&x, &signal);
        let d: f64 = x.iter().zip(&near).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!((d - distance_to_solutions(&x, &signal)).abs() <= 1e-12 * (1.0 + d));
    }
}

#[test]
fn rate_fit_examples() {
    let exact: Vec<(usize, f64)> = [400, 800, 1600, 3200].iter().map(|&n| (n, 3.0 / (n as f64).sqrt())).collect();
    let fit = fit_rate(&exact).unwrap();
    assert!((fit.slope.unwrap() + 0.5).abs() <= 1e-12);
    assert!((fit.intercept.unwrap() - 3f64.ln()).abs() <= 1e-10);
    assert!(fit.residual.unwrap() <= 1e-12);

    let flat: Vec<(usize, f64)> = [100, 200, 300].iter().map(|&n| (n, 0.2)).collect();
    assert!(fit_rate(&flat).unwrap().slope.unwrap().abs() <= 1e-12);

    let zero = [(100, 0.0), (200, 0.0), (300, 0.0)];
    assert_eq!(fit_rate(&zero).unwrap().slope, None);
    assert!(fit_rate(&[(100, 1.0), (200, 0.5)]).is_err());
    assert!(fit_rate(&[(100, 1.0), (100, 0.9), (200, 0.5)]).is_err());
}

#[test]
fn quantiles_interpolate() {
    let v = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(quantile(&v, 0.5), 2.5);
    assert_eq!(quantile(&v, 0.0), 1.0);
    assert_eq!(quantile(&v, 1.0), 4.0);
    assert_eq!(quantile(&[5.0], 0.25), 5.0);
}

#[test]
fn noiseless_two_dimensional_recovery() {
    let report = run_consistency_experiment(&small_experiment(2, 0.0, vec![500], 5)).unwrap();
    assert_eq!(report.records.len(), 5);
    for r in &report.records {
        assert!(r.error.is_none());
        assert!(r.distance <= 1e-2, "{r:?}");
    }
}

#[test]
fn experiments_are_deterministic_and_ordered() {
    let config = small_experiment(3, 0.1, vec![120, 60], 2);
    let a = run_consistency_experiment(&config).unwrap();
    let b = run_consistency_experiment(&config).unwrap();
    let strip = |r: &ExperimentReport| -> Vec<(usize, usize, Vec<f64>, f64)> {
        r.records.iter().map(|x| (x.n, x.replication, x.x_hat.clone(), x.objective)).collect()
    };
    assert_eq!(strip(&a), strip(&b));
    let keys: Vec<(usize, usize)> = a.records.iter().map(|r| (r.n, r.replication)).collect();
    assert_eq!(keys, vec![(60, 0), (60, 1), (120, 0), (120, 1)]);
    assert_eq!(a.summaries.iter().map(|s| s.n).collect::<Vec<_>>(), vec![60, 120]);
    for r in &a.records {
        assert!(r.distance >= 0.0 && (0.0..=std::f64::consts::PI).contains(&r.angle));
    }
}

#[test]
fn grid_points_keep_their_data_when_the_grid_grows() {
    let one = run_consistency_experiment(&small_experiment(3, 0.1, vec![80], 1)).unwrap();
    let two = run_consistency_experiment(&small_experiment(3, 0.1, vec![40, 80], 1)).unwrap();
    assert_eq!(one.records[0].x_hat, two.records[1].x_hat);
}

#[test]
fn experiment_config_is_validated() {
    assert!(run_consistency_experiment(&small_experiment(3, 0.1, vec![], 1)).is_err());
    assert!(run_consistency_experiment(&small_experiment(3, 0.1, vec![10], 0)).is_err());
    let bad_start = ExperimentConfig { start: StartPoint::Fixed { x: vec![0.0; 2] }, ..small_experiment(3, 0.1, vec![10], 1) };
    assert!(run_consistency_experiment(&bad_start).is_err());
}

#[test]
fn normality_needs_enough_replications() {
    let pop = PhasePopulation::new(vec![1.0; 3], 0.1).unwrap();
    assert!(normality_check(&small_experiment(3, 0.1, vec![100], 19), 100, &pop).is_err());
}

#[test]
fn normality_statistics_recompute_from_their_parts() {
    let pop = PhasePopulation::new(vec![1.0; 3], 0.1).unwrap();
    let summary = normality_check(&small_experiment(3, 0.1, vec![200], 20), 200, &pop).unwrap();
    assert_eq!(summary.records.len() + summary.skipped, 20);
    for r in &summary.records {
        assert!((r.limit_value - 0.01).abs() < 1e-15);
        let t = (200.0 / r.variance).sqrt() * (r.objective - r.limit_value);
        assert_eq!(t, r.statistic);
    }
    assert!(summary.variance > 0.0 && summary.mean.is_finite());
}

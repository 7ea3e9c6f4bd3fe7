mod common;

use common::{affine_instance, affine_model_oracle, dot, norm};
use dcmax_core::model::sample_losses;
use dcmax_core::rng::Stream;
use dcmax_core::*;
use proptest::prelude::*;

fn vec_of(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n)
}

fn form_strategy(p: usize, d: usize) -> impl Strategy<Value = AffineForm> {
    (vec_of(p * d), vec_of(p), vec_of(d), -2.0f64..2.0).prop_map(|(feature_map, slope_offset, feature_weights, intercept)| {
        AffineForm { feature_map, slope_offset, feature_weights, intercept }
    })
}

fn piece_strategy(p: usize, d: usize) -> impl Strategy<Value = SmoothConvexPiece> {
    prop_oneof![
        form_strategy(p, d).prop_map(move |f| SmoothConvexPiece::affine(f, p, d).unwrap()),
        (form_strategy(p, d), 0.0f64..2.0).prop_map(move |(f, w)| SmoothConvexPiece::squared_plus(f, w, p, d).unwrap()),
        Just(SmoothConvexPiece::zero(p, d)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn piece_gradient_matches_central_differences(piece in piece_strategy(4, 3), x in vec_of(4), xi in vec_of(3)) {
        let g = piece.gradient(&x, &xi);
        let h = 1e-6;
        for i in 0..4 {
            let mut a = x.clone();
            let mut b = x.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (piece.value(&a, &xi) - piece.value(&b, &xi)) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "{} vs {}", fd, g[i]);
        }
    }

    #[test]
    fn pieces_are_midpoint_convex(piece in piece_strategy(4, 3), x in vec_of(4), y in vec_of(4), xi in vec_of(3)) {
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let lhs = piece.value(&mid, &xi);
        let rhs = 0.5 * (piece.value(&x, &xi) + piece.value(&y, &xi));
        prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn affine_lipschitz_is_slope_norm(form in form_strategy(4, 3), x in vec_of(4), xi in vec_of(3)) {
        let piece = SmoothConvexPiece::affine(form, 4, 3).unwrap();
        let slope = piece.gradient(&x, &xi);
        let lip = piece.lipschitz(&xi, 10.0);
        prop_assert!((lip - norm(&slope)).abs() <= 1e-12 * (1.0 + lip));
        if lip > 1e-9 {
            let y: Vec<f64> = x.iter().zip(&slope).map(|(a, s)| a + s / lip).collect();
            let change = (piece.value(&y, &xi) - piece.value(&x, &xi)).abs();
            prop_assert!((change - lip).abs() <= 1e-9 * (1.0 + lip));
        }
    }

    #[test]
    fn model_lipschitz_bound(seed in 0u64..1000, y in vec_of(9)) {
        let (model, data, x) = affine_instance(seed, 2, 1, 2, 1);
        let xi = data.feature(0);
        let lip = model.lipschitz(xi, 10.0);
        let diff = (model_value(&model, &x, xi).unwrap() - model_value(&model, &y, xi).unwrap()).abs();
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!(diff <= lip * d + 1e-12);
    }

    #[test]
    fn phase_model_is_absolute_inner_product(x in vec_of(5), xi in vec_of(5)) {
        let model = build_phase_retrieval_model(5).unwrap();
        let v = model_value(&model, &x, &xi).unwrap();
        prop_assert!((v - dot(&x, &xi).abs()).abs() <= 1e-14 * (1.0 + v));
    }

    #[test]
    fn piecewise_affine_matches_brute_force(k_f in 1usize..4, k_g in 1usize..4, seed in 0u64..1000) {
        let (model, data, x) = affine_instance(seed, k_f, k_g, 3, 4);
        prop_assert_eq!(model.param_dim, (k_f + k_g) * 4);
        for (xi, _) in data.samples() {
            let v = model_value(&model, &x, xi).unwrap();
            prop_assert!((v - affine_model_oracle(&x, xi, k_f, k_g)).abs() <= 1e-12);
        }
    }

    #[test]
    fn empirical_risk_is_permutation_invariant(seed in 0u64..1000, shift in 0usize..7) {
        let (model, data, x) = affine_instance(seed, 2, 2, 2, 7);
        let order: Vec<usize> = (0..7).map(|i| (i * 3 + shift) % 7).collect();
        let permuted = data.permuted(&order).unwrap();
        for loss in [LossKind::Squared, LossKind::Absolute] {
            let a = empirical_risk(&model, loss, &data, &x).unwrap();
            let b = empirical_risk(&model, loss, &permuted, &x).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
    }

    #[test]
    fn projection_is_idempotent_and_nonexpansive(x in vec_of(3), y in vec_of(3), r in 0.1f64..4.0) {
        let sets = [
            FeasibleSet::Ball { radius: r },
            FeasibleSet::Box { lower: vec![-r, -1.0, 0.0], upper: vec![r, 0.5, 2.0] },
        ];
        for set in &sets {
            let px = set.project(&x);
            let py = set.project(&y);
            prop_assert_eq!(set.project(&px), px.clone());
            let before: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let after: f64 = px.iter().zip(&py).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            prop_assert!(after <= before + 1e-12);
            prop_assert!(set.contains(&px, 1e-12));
        }
    }

    #[test]
    fn loss_split_laws(z in -5.0f64..5.0, kind in prop_oneof![Just(LossKind::Squared), Just(LossKind::Absolute)]) {
        let l = kind.at(z);
        let grid: Vec<f64> = (0..1000).map(|i| -10.0 + 20.0 * i as f64 / 999.0).collect();
        for w in grid.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            prop_assert!((l.up(b) + l.down(b) - l.value(b)).abs() <= 1e-12);
            prop_assert!(l.up(a) <= l.up(b) && l.down(a) >= l.down(b));
            prop_assert!(l.up(b) <= 0.5 * (l.up(a) + l.up(c)) + 1e-12);
            prop_assert!(l.down(b) <= 0.5 * (l.down(a) + l.down(c)) + 1e-12);
        }
    }
}

#[test]
fn absolute_value_through_piecewise_affine_packing() {
    let model = build_piecewise_affine_model(2, 1, 3).unwrap();
    let (a, alpha) = ([0.5, -1.0, 2.0], 0.3);
    let mut x = vec![0.0; 12];
    x[..3].copy_from_slice(&a);
    x[3] = alpha;
    for i in 0..3 {
        x[4 + i] = -a[i];
    }
    x[7] = -alpha;
    let mut rng = Stream::new(3, 0);
    for _ in 0..50 {
        let xi: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let v = model_value(&model, &x, &xi).unwrap();
        assert!((v - (dot(&a, &xi) + alpha).abs()).abs() < 1e-14);
    }
}

#[test]
fn single_pieces_give_affine_residual() {
    let model = build_piecewise_affine_model(1, 1, 2).unwrap();
    let x = [1.0, 2.0, 3.0, -1.0, 0.5, 0.25];
    let xi = [0.4, -0.2];
    let expected = (1.0 * 0.4 + 2.0 * -0.2 + 3.0) - (-1.0 * 0.4 + 0.5 * -0.2 + 0.25);
    assert!((model_value(&model, &x, &xi).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn empirical_risk_matches_naive_loop() {
    let (model, data, x) = affine_instance(42, 2, 2, 3, 3);
    for loss in [LossKind::Squared, LossKind::Absolute] {
        let mut total = 0.0;
        for (xi, z) in data.samples() {
            let r = z - affine_model_oracle(&x, xi, 2, 2);
            total += match loss {
                LossKind::Squared => r * r,
                LossKind::Absolute => r.abs(),
            };
        }
        let risk = empirical_risk(&model, loss, &data, &x).unwrap();
        assert!((risk - total / 3.0).abs() < 1e-12);
        assert_eq!(sample_losses(&model, loss, &data, &x).unwrap().len(), 3);
    }
}

#[test]
fn empirical_risk_one_sample_examples() {
    let model = build_phase_retrieval_model(2).unwrap();
    let data = Dataset::from_rows(&[vec![1.0, 0.0]], vec![1.0]).unwrap();
    assert_eq!(empirical_risk(&model, LossKind::Squared, &data, &[1.0, 0.0]).unwrap(), 0.0);
    assert_eq!(empirical_risk(&model, LossKind::Squared, &data, &[0.0, 0.0]).unwrap(), 1.0);
    assert!(Dataset::from_rows(&[], vec![]).is_err());
}

fn relu_network(b: &[f64], a: &[f64], beta: f64, xi: &[f64]) -> f64 {
    let d = xi.len();
    let hidden: f64 = b.iter().enumerate().map(|(i, bi)| bi * dot(&a[i * d..(i + 1) * d], xi).max(0.0)).sum();
    (hidden + beta).max(0.0)
}

#[test]
fn relu_rewrite_identity_at_small_widths() {
    let mut rng = Stream::new(2024, 0);
    for k in 1..=3 {
        for _ in 0..1000 {
            let d = 3;
            let b: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
            let a: Vec<f64> = (0..k * d).map(|_| rng.normal()).collect();
            let xi: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let beta = rng.normal();
            let split = relu_two_layer_value(&b, &a, beta, &xi).unwrap();
            let direct = relu_network(&b, &a, beta, &xi);
            assert!((split.total - direct).abs() < 1e-12);
            assert!((split.f_value - split.g_value - direct).abs() < 1e-10, "k={k}: {split:?} vs {direct}");
        }
    }
}

use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use splda::problem::validate_oracles;
use splda::wdro::{parse_libsvm, synth_regression_data, synth_ring_classification, vertex_max, RegressionDataset, TargetMode};
use splda::{evaluate_f, gradient_gate, CompositeMinimaxProblem, DenseMatrix, LinregWdro, MlpParams, MlpWdro, NormKind};

#[test]
fn hand_evaluated_single_sample() {
    let data = RegressionDataset::new(DenseMatrix::from_rows(&[vec![1.0]]), vec![1.0], "hand").unwrap();
    let p = LinregWdro::new(data, 1.0, NormKind::L2).unwrap();
    let by_hand = 0.5 * (1.0f64 - 2.0).powi(2) + (2.0f64 - 1.0).abs() * 2.0;
    assert_abs_diff_eq!(by_hand, 2.5, epsilon = 1e-15);
    assert_abs_diff_eq!(evaluate_f(&p, &[2.0], &[1.0]).unwrap(), 2.5, epsilon = 1e-15);
    // single atom: g(θ) = F(θ, (1))
    for t in [-1.3, 0.0, 0.4, 2.0] {
        assert_abs_diff_eq!(p.objective_g(&[t]), evaluate_f(&p, &[t], &[1.0]).unwrap(), epsilon = 1e-14);
    }
}

#[test]
fn zero_parameter_ignores_weights() {
    let data = synth_regression_data(12, 3, 9, TargetMode::Planted).unwrap();
    let expect = data.targets.iter().map(|y| y * y).sum::<f64>() / 24.0;
    let p = LinregWdro::new(data, 2.0, NormKind::L1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let w = splda::problem::sample_point(p.set_y(), &mut rng, 1.0);
        assert_abs_diff_eq!(evaluate_f(&p, &[0.0; 3], &w).unwrap(), expect, epsilon = 1e-13);
    }
    assert_abs_diff_eq!(p.objective_g(&[0.0; 3]), expect, epsilon = 1e-13);
}

#[test]
fn weight_gradient_matches_finite_differences() {
    let data = synth_regression_data(10, 4, 2, TargetMode::Planted).unwrap();
    let cls = synth_ring_classification(20, 1.2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for p in NormKind::ALL {
        let lin = LinregWdro::new(data.clone(), 1.0, p).unwrap();
        assert!(validate_oracles(&lin, &mut rng, 10, 1.0).grad_y_fd_error <= 1e-5);
        let mlp = MlpWdro::new(cls.clone(), 0.5, p).unwrap();
        assert!(validate_oracles(&mlp, &mut rng, 10, 1.0).grad_y_fd_error <= 1e-5);
    }
}

#[test]
fn objective_equals_vertex_maximum() {
    let data = synth_regression_data(8, 3, 4, TargetMode::Independent).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for p in NormKind::ALL {
        let lin = LinregWdro::new(data.clone(), 1.0, p).unwrap();
        for _ in 0..20 {
            let t = splda::problem::sample_point(lin.set_x(), &mut rng, 2.0);
            let g = lin.objective_g(&t);
            assert!((g - vertex_max(&lin, &t).unwrap()).abs() <= 1e-12 * (1.0 + g.abs()));
        }
    }
}

#[test]
fn zero_network_loss_is_log_two() {
    let cls = synth_ring_classification(40, 1.2, 6).unwrap();
    let p = MlpWdro::new(cls.clone(), 1.0, NormKind::L2).unwrap();
    let theta = MlpParams::zeros(2).flatten();
    let w = vec![1.0 / cls.len() as f64; cls.len()];
    assert_abs_diff_eq!(evaluate_f(&p, &theta, &w).unwrap(), std::f64::consts::LN_2, epsilon = 1e-15);
}

#[test]
fn network_derivatives_pass_the_gate() {
    let cls = synth_ring_classification(30, 1.2, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for p in NormKind::ALL {
        let prob = MlpWdro::new(cls.clone(), 1.0, p).unwrap();
        let g = gradient_gate(&prob, &mut rng, 10, 1.0);
        assert!(g.jvp_rel_error <= 1e-4 && g.vjp_rel_error <= 1e-4, "{g:?}");
        assert!(g.adjoint_error <= 1e-10, "{g:?}");
    }
}

#[test]
fn synthetic_regression_shapes_and_determinism() {
    let a = synth_regression_data(500, 10, 7, TargetMode::Planted).unwrap();
    let b = synth_regression_data(500, 10, 7, TargetMode::Planted).unwrap();
    assert_eq!(a, b);
    assert_eq!((a.features.rows(), a.features.cols(), a.targets.len()), (500, 10, 500));
    let band = 4.0 / (500f64).sqrt();
    for j in 0..10 {
        let mean = (0..500).map(|i| a.features.get(i, j)).sum::<f64>() / 500.0;
        assert!(mean.abs() <= band, "feature {j} mean {mean}");
    }
}

#[test]
fn ring_filter_and_labels() {
    let all = synth_ring_classification(300, 1.0, 1).unwrap();
    assert_eq!(all.len(), 300);
    let cut = synth_ring_classification(300, 1.2, 1).unwrap();
    let (lo, hi) = (2f64.sqrt() / 1.2, 1.2 * 2f64.sqrt());
    assert!(cut.len() < 300);
    for i in 0..cut.len() {
        let row = cut.features.row(i);
        let norm = (row[0] * row[0] + row[1] * row[1]).sqrt();
        assert!(!(norm > lo && norm < hi), "kept norm {norm}");
        assert_eq!(cut.labels[i], if norm >= 2f64.sqrt() { 1.0 } else { -1.0 });
    }
    assert!(synth_ring_classification(10, 0.5, 1).is_err());
}

#[test]
fn libsvm_lines() {
    let d = parse_libsvm("1.5 1:0.2 3:-1\n".as_bytes(), Some(3), "inline").unwrap();
    assert_eq!(d.features.row(0), &[0.2, 0.0, -1.0]);
    assert_eq!(d.targets, vec![1.5]);
    assert!(parse_libsvm("".as_bytes(), None, "empty").is_err());
}

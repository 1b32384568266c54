mod common;

use approx::assert_abs_diff_eq;
use common::ScalarLinear;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splda::problem::sample_point;
use splda::prox_linear::model_value;
use splda::{evaluate_f, solve_subproblem, CompositeMinimaxProblem, InnerSolverConfig, KlInstance, SubproblemSpec, ToyId, ToyProblem2D};

/// Grid minimizer of a scalar function on `[lo, hi]`, refined twice.
fn grid_argmin(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut best = lo;
    for _ in 0..3 {
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        best = (0..=n).map(|i| lo + i as f64 * h).min_by(|a, b| f(*a).total_cmp(&f(*b))).unwrap();
        lo = best - 2.0 * h;
        hi = best + 2.0 * h;
    }
    best
}

#[test]
fn linear_scalar_subproblem_has_closed_form() {
    let p = ScalarLinear::new();
    let spec = SubproblemSpec::new(&p, &[0.0], &[0.0], &[0.0], 1.0, 3.0).unwrap();
    let sol = solve_subproblem(&p, &spec, &InnerSolverConfig::with_target(1e-12)).unwrap();
    let oracle = grid_argmin(|x| model_value(&p, &spec, &[x]), -2.0, 2.0);
    assert_abs_diff_eq!(oracle, -0.25, epsilon = 1e-6);
    assert_abs_diff_eq!(sol.x[0], -0.25, epsilon = 1e-12);
}

#[test]
fn minimizer_is_a_fixed_point() {
    // x_k = z_k = 0 with zero linear part: the model is minimized at the anchor
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let spec = SubproblemSpec::new(&toy, &[0.4], &[0.0], &[0.4], 1.0, 3.0).unwrap();
    let sol = solve_subproblem(&toy, &spec, &InnerSolverConfig::with_target(1e-12)).unwrap();
    assert_abs_diff_eq!(sol.x[0], 0.4, epsilon = 1e-12);
}

#[test]
fn cubic_toy_zero_linearization_at_origin() {
    let toy = ToyProblem2D::new(ToyId::CubicQuadratic);
    let spec = SubproblemSpec::new(&toy, &[0.0], &[0.0], &[0.0], 1.0, 3.0).unwrap();
    for x in [-0.7, -0.1, 0.3, 0.9] {
        assert_abs_diff_eq!(model_value(&toy, &spec, &[x]), 0.5 * x * x + 1.5 * x * x, epsilon = 1e-14);
    }
    let sol = solve_subproblem(&toy, &spec, &InnerSolverConfig::with_target(1e-12)).unwrap();
    assert_abs_diff_eq!(sol.x[0], 0.0, epsilon = 1e-12);
}

#[test]
fn model_at_anchor_is_h_of_c0() {
    let kl = KlInstance::planar();
    let x = [0.3, -0.8];
    let y = [0.2, 0.1];
    let spec = SubproblemSpec::new(&kl, &x, &y, &x, 2.0, 5.0).unwrap();
    assert_eq!(model_value(&kl, &spec, &x), kl.h_eval(&spec.c0, &y));
}

#[test]
fn affine_model_is_exact() {
    let p = ScalarLinear::new();
    let spec = SubproblemSpec::new(&p, &[0.2], &[0.0], &[-0.3], 1.5, 2.5).unwrap();
    for x in [-1.0, 0.0, 0.7] {
        let exact = evaluate_f(&p, &[x], &[0.0]).unwrap() + 0.75 * (x - 0.2f64).powi(2) + 1.25 * (x + 0.3f64).powi(2);
        assert_abs_diff_eq!(model_value(&p, &spec, &[x]), exact, epsilon = 1e-14);
    }
}

fn check_two_sided_bound<P: CompositeMinimaxProblem>(p: &P, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = p.constants().l();
    for _ in 0..200 {
        let x_k = sample_point(p.set_x(), &mut rng, 1.0);
        let z = sample_point(p.set_x(), &mut rng, 1.0);
        let y = sample_point(p.set_y(), &mut rng, 1.0);
        let lambda = rng.random_range(0.1..10.0);
        let r = rng.random_range(0.1..10.0);
        let spec = SubproblemSpec::new(p, &x_k, &y, &z, lambda, r).unwrap();
        let x = sample_point(p.set_x(), &mut rng, 1.0);
        let d2 = splda::linalg::dist(&x, &x_k).powi(2);
        let gap = model_value(p, &spec, &x) - evaluate_f(p, &x, &y).unwrap() - 0.5 * r * splda::linalg::dist(&x, &z).powi(2);
        let slack = 1e-12 * (1.0 + gap.abs());
        assert!(gap >= 0.5 * (lambda - l) * d2 - slack, "lower bound fails: {gap} vs {}", 0.5 * (lambda - l) * d2);
        assert!(gap <= 0.5 * (lambda + l) * d2 + slack, "upper bound fails: {gap} vs {}", 0.5 * (lambda + l) * d2);
    }
}

#[test]
fn model_gap_lies_in_the_two_sided_band() {
    check_two_sided_bound(&ToyProblem2D::new(ToyId::CubicQuadratic), 1);
    check_two_sided_bound(&ToyProblem2D::new(ToyId::SineBilinear), 2);
    check_two_sided_bound(&KlInstance::planar(), 3);
}

#[test]
fn certificate_bounds_distance_to_brute_force_minimizer() {
    let toy = ToyProblem2D::new(ToyId::SineBilinear);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x_k = sample_point(toy.set_x(), &mut rng, 1.0);
        let z = sample_point(toy.set_x(), &mut rng, 1.0);
        let y = sample_point(toy.set_y(), &mut rng, 1.0);
        let spec = SubproblemSpec::new(&toy, &x_k, &y, &z, 1.0, 3.0).unwrap();
        let sol = solve_subproblem(&toy, &spec, &InnerSolverConfig::with_target(1e-9)).unwrap();
        let (lo, hi) = toy.x_bounds();
        let oracle = grid_argmin(|x| model_value(&toy, &spec, &[x]), lo, hi);
        assert!((sol.x[0] - oracle).abs() <= sol.certificate + 1e-6);
    }
}

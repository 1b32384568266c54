mod common;

use approx::assert_abs_diff_eq;
use common::BoxBilinear;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use splda::problem::sample_point;
use splda::stationarity::{compute_x_r, dual_function, evaluate_potential, gs_residuals, os_residual, proximal_point, smoothed_value, ProximalConfig};
use splda::{CompositeMinimaxProblem, KlInstance, ToyId, ToyProblem2D};

#[test]
fn zero_dual_leaves_pure_proximal_pull() {
    let p = BoxBilinear::new();
    let x = compute_x_r(&p, &[0.0], &[0.3], 3.0, 1e-12).unwrap();
    assert_abs_diff_eq!(x.x[0], 0.3, epsilon = 1e-12);
}

#[test]
fn unit_dual_gives_minus_one_third() {
    let p = BoxBilinear::new();
    let x = compute_x_r(&p, &[1.0], &[0.0], 3.0, 1e-12).unwrap();
    // brute force of x + 3/2 x² over [-1, 1]
    let oracle = (0..=200_000)
        .map(|i| -1.0 + i as f64 * 1e-5)
        .min_by(|a, b| (a + 1.5 * a * a).total_cmp(&(b + 1.5 * b * b)))
        .unwrap();
    assert_abs_diff_eq!(oracle, -1.0 / 3.0, epsilon = 1e-5);
    assert_abs_diff_eq!(x.x[0], -1.0 / 3.0, epsilon = 1e-12);
    assert!(x.certificate <= 1e-12);
}

#[test]
fn proximal_point_matches_x_r_at_dual_maximizer() {
    let kl = KlInstance::planar();
    let z = [0.4, -0.3];
    let prox = proximal_point(&kl, &z, 3.0 * kl.constants().l(), &ProximalConfig::default(), None).unwrap();
    let x_r = compute_x_r(&kl, &prox.y, &z, 3.0 * kl.constants().l(), 1e-10).unwrap();
    assert!(splda::linalg::dist(&prox.x, &x_r.x) <= prox.certificate + x_r.certificate + 1e-9);
}

#[test]
fn game_residuals_at_reference_points() {
    let r = 3.0;
    let c = ToyProblem2D::new(ToyId::Bilinear);
    let g = gs_residuals(&c, &[0.0], &[0.0], r, 1e-12).unwrap();
    assert!(g.primal <= 1e-10 && g.dual == 0.0);

    let a = ToyProblem2D::new(ToyId::CubicQuadratic);
    let g = gs_residuals(&a, &[-2.0 / 3.0], &[2.0 / 3.0], 3.0 * a.constants().l(), 1e-12).unwrap();
    assert!(g.primal <= 1e-8, "{g:?}");
    assert!(g.dual <= 1e-14);

    let b = ToyProblem2D::new(ToyId::SineBilinear);
    let g = gs_residuals(&b, &[0.0], &[0.5], r, 1e-12).unwrap();
    assert_eq!(g.dual, 0.0);
    assert!(g.primal >= 0.1, "{g:?}");
}

#[test]
fn listed_game_stationary_points_have_small_residuals() {
    use std::f64::consts::FRAC_PI_2;
    let cases = [
        (ToyId::CubicQuadratic, vec![(-1.0, 1.0), (-2.0 / 3.0, 2.0 / 3.0), (0.0, 0.0)]),
        (ToyId::SineBilinear, vec![(-FRAC_PI_2, -1.0), (0.0, 0.0), (FRAC_PI_2, 1.0)]),
        (ToyId::Bilinear, vec![(0.0, 0.0)]),
    ];
    for (id, pts) in cases {
        let toy = ToyProblem2D::new(id);
        let r = 3.0 * toy.constants().l();
        for (x, y) in pts {
            let g = gs_residuals(&toy, &[x], &[y], r, 1e-12).unwrap();
            assert!(g.max() <= 1e-6, "{id:?} at ({x}, {y}): {g:?}");
        }
    }
    // (0, 0.5) of toy (b) and (0, -1) of toy (c) are optimization but not game stationary
    let b = ToyProblem2D::new(ToyId::SineBilinear);
    assert!(gs_residuals(&b, &[0.0], &[0.5], 3.0, 1e-12).unwrap().max() >= 0.1);
    let c = ToyProblem2D::new(ToyId::Bilinear);
    assert!(gs_residuals(&c, &[0.0], &[-1.0], 3.0, 1e-12).unwrap().max() >= 0.1);
}

#[test]
fn optimization_residual_at_reference_points() {
    let b = ToyProblem2D::new(ToyId::SineBilinear);
    let o = os_residual(&b, &[0.0], 3.0, 1e-10).unwrap();
    assert!(o.value <= 1e-8, "{o:?}");
    let a = ToyProblem2D::new(ToyId::CubicQuadratic);
    let o = os_residual(&a, &[-2.0 / 3.0], 3.0 * a.constants().l(), 1e-10).unwrap();
    assert!(o.value <= 1e-8, "{o:?}");
}

#[test]
fn optimization_residual_is_stable_under_requery() {
    let kl = KlInstance::planar();
    let r = 3.0 * kl.constants().l();
    let first = os_residual(&kl, &[0.5, 0.2], r, 1e-9).unwrap();
    let again = os_residual(&kl, &[0.5, 0.2], r, 1e-9).unwrap();
    assert!((first.value - again.value).abs() <= first.certificate + again.certificate);
}

#[test]
fn potential_vanishes_at_global_saddle() {
    let c = ToyProblem2D::new(ToyId::Bilinear);
    let p = evaluate_potential(&c, &[0.0], &[0.0], &[0.0], 3.0, 1e-10).unwrap();
    assert_abs_diff_eq!(p.f_r, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p.d_r, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(p.p_r, 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(p.phi, 0.0, epsilon = 1e-8);
}

fn check_orderings<P: CompositeMinimaxProblem>(p: &P, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = 3.0 * p.constants().l();
    for _ in 0..30 {
        let x = sample_point(p.set_x(), &mut rng, 1.0);
        let y = sample_point(p.set_y(), &mut rng, 1.0);
        let z = sample_point(p.set_x(), &mut rng, 1.0);
        let pot = evaluate_potential(p, &x, &y, &z, r, 1e-9).unwrap();
        let d = dual_function(p, &y, &z, r, 1e-9).unwrap();
        let slack = pot.uncertainty + 1e-9;
        assert!(pot.phi >= pot.p_r - slack, "Φ_r < p_r");
        assert!(smoothed_value(p, &x, &y, &z, r) >= d.lower - 1e-12, "F_r < d_r");
        assert!(pot.prox.upper >= d.lower - 1e-12, "p_r < d_r");
    }
}

#[test]
fn potential_and_value_orderings_hold_on_samples() {
    check_orderings(&ToyProblem2D::new(ToyId::CubicQuadratic), 1);
    check_orderings(&ToyProblem2D::new(ToyId::SineBilinear), 2);
    check_orderings(&KlInstance::planar(), 3);
}

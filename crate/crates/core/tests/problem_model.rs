mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use splda::problem::sample_point;
use splda::wdro::{synth_regression_data, TargetMode};
use splda::{derive_parameters, evaluate_f, ConvexSet, LinregWdro, NormKind, ProblemConstants, Regime, ToyId, ToyProblem2D};

fn zeta_by_hand(l: f64, r: f64, lambda: f64) -> f64 {
    let a = 1.0 / (r - l);
    let b = 1.0 / (lambda + l);
    ((2.0 * a + b) / b) * ((2.0 * l / (lambda + l)).sqrt() + 1.0)
}

#[test]
fn unit_l_general_regime_parameters() {
    let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap();
    let p = derive_parameters(&c, Regime::General, 10_000).unwrap();
    assert_abs_diff_eq!(p.r, 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(p.lambda, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(p.zeta, zeta_by_hand(1.0, 3.0, 1.0), epsilon = 1e-12);
    assert_abs_diff_eq!(p.zeta, 6.0, epsilon = 1e-12);
    assert_abs_diff_eq!(p.alpha, 1.0 / 144.0, epsilon = 1e-15);
}

#[test]
fn unit_l_lipschitz_constants() {
    let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap();
    let p = derive_parameters(&c, Regime::General, 100).unwrap();
    assert_abs_diff_eq!(p.sigma1, 1.5, epsilon = 1e-15);
    assert_abs_diff_eq!(p.sigma2, 4.0, epsilon = 1e-15);
    assert_abs_diff_eq!(p.l_dr, 5.0, epsilon = 1e-15);
}

#[test]
fn kl_regime_without_exponent_is_rejected() {
    let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap();
    assert!(derive_parameters(&c, Regime::Kl, 100).is_err());
}

#[test]
fn zero_factor_and_cubic_values() {
    let c = ToyProblem2D::new(ToyId::Bilinear);
    assert_eq!(evaluate_f(&c, &[0.0], &[0.5]).unwrap(), 0.0);
    let a = ToyProblem2D::new(ToyId::CubicQuadratic);
    let direct = (-1.0f64).powi(3) - 2.0 * (-1.0) * 1.0 - 1.0;
    assert_abs_diff_eq!(evaluate_f(&a, &[-1.0], &[1.0]).unwrap(), direct, epsilon = 1e-15);
    assert_abs_diff_eq!(direct, 0.0, epsilon = 1e-15);
}

#[test]
fn linreg_at_zero_is_half_mean_square_target() {
    let data = synth_regression_data(15, 4, 3, TargetMode::Planted).unwrap();
    let expect = data.targets.iter().map(|y| 0.5 * y * y).sum::<f64>() / 15.0;
    for p in NormKind::ALL {
        let prob = LinregWdro::new(data.clone(), 1.0, p).unwrap();
        let mut w = vec![0.0; 15];
        w[3] = 1.0;
        assert_abs_diff_eq!(evaluate_f(&prob, &[0.0; 4], &w).unwrap(), expect, epsilon = 1e-13);
    }
}

#[test]
fn projection_examples() {
    let s = ConvexSet::simplex(2).unwrap();
    assert_eq!(s.project(&[0.5, 0.5]).unwrap(), vec![0.5, 0.5]);
    assert_eq!(s.project(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    let b = ConvexSet::cube(2, -1.0, 1.0);
    assert_eq!(b.project(&[3.0, -0.2]).unwrap(), vec![1.0, -0.2]);
}

#[test]
fn normal_cone_examples() {
    let w = ConvexSet::whole_space(2);
    assert_eq!(w.normal_cone_distance(&[0.3, 0.1], &[0.0, 0.0]).unwrap(), 0.0);
    let y = ConvexSet::cube(1, -1.0, 1.0);
    // toy (b) at (π/2, 1): ∇_y F = sin(π/2) = 1 points outward
    let v = std::f64::consts::FRAC_PI_2.sin();
    assert_abs_diff_eq!(y.normal_cone_distance(&[1.0], &[v]).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(y.normal_cone_distance(&[1.0], &[-1.0]).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn diameter_examples() {
    assert_abs_diff_eq!(ConvexSet::simplex(2).unwrap().diameter(), 2f64.sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(ConvexSet::cube(2, -1.0, 1.0).diameter(), 2.0 * 2f64.sqrt(), epsilon = 1e-15);
    assert_eq!(ConvexSet::whole_space(3).diameter(), f64::INFINITY);
}

fn sets(dim: usize) -> Vec<ConvexSet> {
    vec![
        ConvexSet::whole_space(dim),
        ConvexSet::cube(dim, -0.5, 1.5),
        ConvexSet::ball(vec![0.2; dim], 0.8).unwrap(),
        ConvexSet::simplex(dim).unwrap(),
    ]
}

fn vec_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|d| {
        let v = || prop::collection::vec(-5.0f64..5.0, d);
        (v(), v(), v())
    })
}

proptest! {
    #[test]
    fn projection_is_idempotent_feasible_and_nonexpansive((a, b, c) in vec_strategy()) {
        for set in sets(a.len()) {
            let pa = set.project(&a).unwrap();
            let pb = set.project(&b).unwrap();
            prop_assert!(set.contains(&pa, 1e-12));
            let again = set.project(&pa).unwrap();
            prop_assert!(splda::linalg::dist(&again, &pa) <= 1e-12);
            prop_assert!(splda::linalg::dist(&pa, &pb) <= splda::linalg::dist(&a, &b) * (1.0 + 1e-12) + 1e-14);
            // variational inequality against a feasible point
            let pc = set.project(&c).unwrap();
            let lhs = splda::linalg::dot(&splda::linalg::sub(&a, &pa), &splda::linalg::sub(&pc, &pa));
            prop_assert!(lhs <= 1e-10);
        }
    }

    #[test]
    fn normal_cone_distance_is_zero_for_the_projection_residual((a, _b, _c) in vec_strategy()) {
        for set in sets(a.len()) {
            let pa = set.project(&a).unwrap();
            let v = splda::linalg::sub(&a, &pa);
            prop_assert!(set.normal_cone_distance(&pa, &v).unwrap() <= 1e-9 * (1.0 + splda::linalg::norm(&v)));
        }
    }

    #[test]
    fn sampled_points_are_feasible(seed in 0u64..1000) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for set in sets(3) {
            prop_assert!(set.contains(&sample_point(&set, &mut rng, 2.0), 1e-12));
        }
    }
}

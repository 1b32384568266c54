use splda::solver::run;
use splda::stationarity::os_residual;
use splda::verification::{
    check_dual_error_bound, check_primal_error_bound, check_rate_slope, check_sufficient_decrease, enumerate_stationary_sets, inequality_ratio,
    rate_points, DualBoundForm, StationaryCluster,
};
use splda::{derive_parameters, CompositeMinimaxProblem, InnerSolverConfig, IterateTrace, KlInstance, PldaConfig, Regime, SolverState, ToyId, ToyProblem2D};

fn toy_trace(id: ToyId, x0: f64, y0: f64, steps: usize) -> (ToyProblem2D, splda::DerivedConstants, IterateTrace) {
    let toy = ToyProblem2D::new(id);
    let params = derive_parameters(toy.constants(), Regime::General, 1000).unwrap();
    let mut cfg = PldaConfig::new(params.clone(), steps);
    cfg.inner = InnerSolverConfig::with_target(1e-12);
    cfg.trace.keep_states = true;
    let out = run(&toy, SolverState::initial(&toy, &[x0], &[y0], None).unwrap(), &cfg).unwrap();
    (toy, params, out.trace)
}

#[test]
fn degenerate_ratio_is_zero() {
    assert_eq!(inequality_ratio(0.0, 0.0), 0.0);
    assert_eq!(inequality_ratio(1.0, 2.0), 0.5);
}

#[test]
fn primal_bound_on_bilinear_toy() {
    let (toy, params, trace) = toy_trace(ToyId::Bilinear, 1.0, 1.0, 50);
    let rep = check_primal_error_bound(&toy, &trace, &params, 1e-12).unwrap();
    assert!(rep.pass && rep.worst_ratio <= 1.0, "{}", rep.summary_line());
    let (toy, params, trace) = toy_trace(ToyId::Bilinear, 0.0, 0.0, 10);
    let rep = check_primal_error_bound(&toy, &trace, &params, 1e-12).unwrap();
    assert_eq!(rep.worst_ratio, 0.0);
}

#[test]
fn sufficient_decrease_on_bilinear_toy() {
    let (toy, params, trace) = toy_trace(ToyId::Bilinear, 1.0, 1.0, 30);
    let rep = check_sufficient_decrease(&toy, &trace, &params, 1e-12).unwrap();
    assert!(rep.pass, "{}", rep.summary_line());
    let (toy, params, trace) = toy_trace(ToyId::Bilinear, 0.0, 0.0, 5);
    assert!(check_sufficient_decrease(&toy, &trace, &params, 1e-12).unwrap().pass);
}

#[test]
fn dual_bound_is_trivial_at_a_dual_maximizer() {
    // F = xy - y²: d_r(y, 0) = -y²/(2r) - y² is maximized at y = 0
    let kl = KlInstance::scalar();
    let params = derive_parameters(kl.constants(), Regime::Kl, 100).unwrap();
    let rep = check_dual_error_bound(&kl, &[(vec![0.0], vec![0.0])], &params, DualBoundForm::Kl, 1e-12).unwrap();
    assert!(rep.pass);
    assert!(rep.worst_ratio <= 1e-6, "{}", rep.summary_line());
}

fn covers_segment(clusters: &[StationaryCluster], x: f64, tol: f64) -> bool {
    clusters
        .iter()
        .any(|c| (c.x_range.0 - tol..=c.x_range.1 + tol).contains(&x) && c.y_range.0 <= -1.0 + tol && c.y_range.1 >= 1.0 - tol)
}

fn near(clusters: &[StationaryCluster], p: (f64, f64), tol: f64) -> bool {
    clusters
        .iter()
        .any(|c| (c.representative.0 - p.0).abs() <= tol && (c.representative.1 - p.1).abs() <= tol)
}

#[test]
fn cubic_toy_sets() {
    let step = 1e-3;
    let s = enumerate_stationary_sets(&ToyProblem2D::new(ToyId::CubicQuadratic), step, 1e-2);
    assert_eq!(s.gs.len(), 3);
    for p in [(-1.0, 1.0), (-2.0 / 3.0, 2.0 / 3.0), (0.0, 0.0)] {
        assert!(near(&s.gs, p, 2.0 * step), "GS misses {p:?}");
    }
    assert_eq!(s.mp.len(), 2);
    assert!(near(&s.mp, (-1.0, 1.0), 2.0 * step) && near(&s.mp, (0.0, 0.0), 2.0 * step));
}

#[test]
fn sine_toy_optimization_set_contains_segment() {
    let s = enumerate_stationary_sets(&ToyProblem2D::new(ToyId::SineBilinear), 1e-3, 1e-2);
    assert!(covers_segment(&s.os, 0.0, 2e-3));
    assert!(!covers_segment(&s.gs, 0.0, 2e-3));
}

#[test]
fn bilinear_toy_sets() {
    let step = 1e-3;
    let s = enumerate_stationary_sets(&ToyProblem2D::new(ToyId::Bilinear), step, 1e-2);
    assert_eq!(s.gs.len(), 1);
    assert!(near(&s.gs, (0.0, 0.0), 2.0 * step));
    assert!(covers_segment(&s.os, 0.0, 2.0 * step));
    assert!(s.truncated_x.is_some());
    assert!(s.agreement() == (true, true, true));
}

#[test]
fn optimization_residual_vanishes_at_exact_game_stationary_point() {
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let o = os_residual(&toy, &[0.0], 3.0, 1e-12).unwrap();
    assert!(o.value <= o.certificate + 1e-12);
}

#[test]
fn rate_check_passes_vacuously_from_a_stationary_start() {
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let init = SolverState::initial(&toy, &[0.0], &[0.0], None).unwrap();
    let pts = rate_points(&toy, &init, Regime::General, &[10, 40], 1e-12).unwrap();
    assert!(pts.iter().all(|p| p.best_gs == 0.0));
    assert!(check_rate_slope(&pts, 0.25, "origin").unwrap().pass);
}

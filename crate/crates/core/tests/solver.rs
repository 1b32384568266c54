mod common;

use approx::assert_abs_diff_eq;
use common::BoxBilinear;
use splda::prox_linear::model_value;
use splda::solver::{run, step};
use splda::{derive_parameters, DerivedConstants, InnerSolverConfig, PldaConfig, ProblemConstants, Regime, SolverState, SubproblemSpec, ToyId, ToyProblem2D, TraceOptions};

fn unit_params() -> DerivedConstants {
    let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap();
    DerivedConstants::from_parts(&c, 3.0, 1.0, 1.0 / 144.0, 0.01).unwrap()
}

fn state(x: f64, y: f64, z: f64) -> SolverState {
    SolverState {
        x: vec![x],
        y: vec![y],
        z: vec![z],
        k: 0,
        certificate: 0.0,
    }
}

#[test]
fn one_step_on_box_bilinear() {
    let p = BoxBilinear::new();
    let params = unit_params();
    let inner = InnerSolverConfig::with_target(1e-12);
    let next = step(&p, &state(1.0, 1.0, 1.0), &params, &inner).unwrap();

    // brute-force x-update over [-1, 1]
    let spec = SubproblemSpec::new(&p, &[1.0], &[1.0], &[1.0], 1.0, 3.0).unwrap();
    let x_oracle = (0..=200_000)
        .map(|i| -1.0 + i as f64 * 1e-5)
        .min_by(|a, b| model_value(&p, &spec, &[*a]).total_cmp(&model_value(&p, &spec, &[*b])))
        .unwrap();
    assert_abs_diff_eq!(x_oracle, 0.75, epsilon = 1e-5);

    assert_abs_diff_eq!(next.x[0], 0.75, epsilon = 1e-12);
    assert_abs_diff_eq!(next.y[0], 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(next.z[0], 0.9975, epsilon = 1e-14);
    assert_eq!(next.k, 1);
}

#[test]
fn origin_is_a_fixed_point_of_box_bilinear() {
    let p = BoxBilinear::new();
    let next = step(&p, &state(0.0, 0.0, 0.0), &unit_params(), &InnerSolverConfig::with_target(1e-12)).unwrap();
    assert_eq!((next.x[0], next.y[0], next.z[0]), (0.0, 0.0, 0.0));
}

#[test]
fn smoothed_saddle_state_is_unchanged() {
    // (-1, 1) is game stationary for toy (a), and x_r(1, -1) = -1
    let toy = ToyProblem2D::new(ToyId::CubicQuadratic);
    let params = derive_parameters(splda::CompositeMinimaxProblem::constants(&toy), Regime::General, 1000).unwrap();
    let s = state(-1.0, 1.0, -1.0);
    let x_r = splda::stationarity::compute_x_r(&toy, &s.y, &s.z, params.r, 1e-12).unwrap();
    assert_abs_diff_eq!(x_r.x[0], -1.0, epsilon = 1e-10);
    let next = step(&toy, &s, &params, &InnerSolverConfig::with_target(1e-12)).unwrap();
    assert_abs_diff_eq!(next.x[0], -1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(next.y[0], 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(next.z[0], -1.0, epsilon = 1e-12);
}

fn near_one_of(p: (f64, f64), set: &[(f64, f64)], tol: f64) -> bool {
    set.iter().any(|q| (p.0 - q.0).abs() <= tol && (p.1 - q.1).abs() <= tol)
}

fn best_iterate(id: ToyId, x0: f64, y0: f64, horizon: usize) -> (f64, f64) {
    let toy = ToyProblem2D::new(id);
    let params = derive_parameters(splda::CompositeMinimaxProblem::constants(&toy), Regime::General, horizon).unwrap();
    let mut cfg = PldaConfig::new(params, horizon);
    cfg.inner = InnerSolverConfig::with_target(1e-10);
    cfg.trace = TraceOptions {
        gs: true,
        stride: 10,
        tol: 1e-10,
        ..TraceOptions::default()
    };
    let out = run(&toy, SolverState::initial(&toy, &[x0], &[y0], None).unwrap(), &cfg).unwrap();
    (out.best.x[0], out.best.y[0])
}

#[test]
fn cubic_toy_reaches_a_game_stationary_point() {
    let gs = [(-1.0, 1.0), (-2.0 / 3.0, 2.0 / 3.0), (0.0, 0.0)];
    // theory step sizes are small here (α = 1/864), so 2000 steps only get within 0.05
    let best = best_iterate(ToyId::CubicQuadratic, 0.5, 0.0, 20_000);
    assert!(near_one_of(best, &gs, 1e-2), "best iterate {best:?}");
}

#[test]
fn sine_toy_reaches_a_game_stationary_point() {
    use std::f64::consts::FRAC_PI_2;
    let gs = [(-FRAC_PI_2, -1.0), (0.0, 0.0), (FRAC_PI_2, 1.0)];
    let best = best_iterate(ToyId::SineBilinear, 1.0, 0.5, 5000);
    assert!(near_one_of(best, &gs, 1e-2), "best iterate {best:?}");
}

#[test]
fn bilinear_toy_stays_at_origin() {
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let params = derive_parameters(splda::CompositeMinimaxProblem::constants(&toy), Regime::General, 50).unwrap();
    let mut cfg = PldaConfig::new(params, 50);
    cfg.trace.keep_states = true;
    let out = run(&toy, SolverState::initial(&toy, &[0.0], &[0.0], None).unwrap(), &cfg).unwrap();
    assert_eq!(out.trace.states.len(), 51);
    assert!(out.trace.states.iter().all(|s| s.x == [0.0] && s.y == [0.0] && s.z == [0.0]));
}

#[test]
fn out_of_theory_parameters_need_force() {
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let c = splda::CompositeMinimaxProblem::constants(&toy);
    let params = DerivedConstants::from_parts(c, 3.0, 1.0, 0.5, 0.5).unwrap();
    let init = SolverState::initial(&toy, &[1.0], &[0.0], None).unwrap();
    let mut cfg = PldaConfig::new(params, 5);
    assert!(run(&toy, init.clone(), &cfg).is_err());
    cfg.force = true;
    let out = run(&toy, init, &cfg).unwrap();
    assert!(!out.trace.metadata.notes.is_empty());
}

#[test]
fn trace_csv_has_header_and_one_row_per_record() {
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let params = derive_parameters(splda::CompositeMinimaxProblem::constants(&toy), Regime::General, 10).unwrap();
    let mut cfg = PldaConfig::new(params, 10);
    cfg.trace.objective = true;
    let out = run(&toy, SolverState::initial(&toy, &[1.0], &[0.5], None).unwrap(), &cfg).unwrap();
    let csv = out.trace.to_csv_string();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], format!("{},objective,best_objective", splda::solver::CSV_COLUMNS.join(",")));
    let best: Vec<f64> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(lines.len(), out.trace.records.len() + 1);
}

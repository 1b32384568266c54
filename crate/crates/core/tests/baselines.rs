use approx::assert_abs_diff_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splda::baselines::{clarke_subgradient_max, grid_search, smoothed_gda_run, subgradient_method, FnMinProblem, SgdaConfig, StepSchedule, SubgradientConfig};
use splda::solver::run;
use splda::{derive_parameters, CompositeMinimaxProblem, ConvexSet, InnerSolverConfig, PldaConfig, Regime, SolverState, ToyId, ToyProblem2D, TraceOptions};

#[test]
fn clarke_picks_the_first_maximizing_piece() {
    let g = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    assert_eq!(clarke_subgradient_max(&[3.0, 1.0], &g).unwrap(), vec![1.0, 0.0]);
    assert_eq!(clarke_subgradient_max(&[2.0, 2.0], &g).unwrap(), vec![1.0, 0.0]);
    assert_eq!(clarke_subgradient_max(&[-4.0], &[vec![0.5, 2.0]]).unwrap(), vec![0.5, 2.0]);
    assert!(clarke_subgradient_max(&[], &[]).is_err());
}

fn abs_problem() -> FnMinProblem<impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> Vec<f64>> {
    FnMinProblem {
        set: ConvexSet::whole_space(1),
        value: |x: &[f64]| x[0].abs(),
        subgradient: |x: &[f64]| vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }],
    }
}

#[test]
fn subgradient_on_absolute_value_settles_in_step_band() {
    let s0 = 0.5;
    let horizon = 200;
    let cfg = SubgradientConfig {
        schedule: StepSchedule::Diminishing { s0 },
        horizon,
    };
    let trace = subgradient_method(&abs_problem(), &[1.0], &cfg).unwrap();
    let g: Vec<f64> = trace.records.iter().map(|r| r.objective.unwrap()).collect();
    let cross = g.windows(2).position(|w| w[1] > w[0]).unwrap_or(g.len() - 1);
    assert!(g[..=cross].windows(2).all(|w| w[1] <= w[0]), "approach is not monotone");
    assert!(g.iter().all(|v| *v <= 1.0));
    assert!(g[horizon] <= s0 / (horizon as f64).sqrt() + 1e-15);
}

#[test]
fn subgradient_on_kinked_max_oscillates_around_zero() {
    let p = FnMinProblem {
        set: ConvexSet::whole_space(1),
        value: |x: &[f64]| x[0].max(-2.0 * x[0]),
        subgradient: |x: &[f64]| clarke_subgradient_max(&[x[0], -2.0 * x[0]], &[vec![1.0], vec![-2.0]]).unwrap(),
    };
    let s0 = 0.1;
    let cfg = SubgradientConfig {
        schedule: StepSchedule::Diminishing { s0 },
        horizon: 10,
    };
    let trace = subgradient_method(&p, &[0.0], &cfg).unwrap();
    // hand simulation: the tie at 0 picks slope 1, so the first step goes to -s0
    let mut x = 0.0f64;
    for t in 0..10 {
        let slope = if x >= -2.0 * x { 1.0 } else { -2.0 };
        x -= s0 / ((t + 1) as f64).sqrt() * slope;
        assert_abs_diff_eq!(trace.records[t + 1].objective.unwrap(), x.max(-2.0 * x), epsilon = 1e-15);
        assert!(x.abs() <= 2.0 * s0);
    }
    assert_abs_diff_eq!(trace.states[0].x[0], x, epsilon = 1e-15);
}

#[test]
fn sgda_stays_at_fixed_point() {
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let params = derive_parameters(toy.constants(), Regime::General, 30).unwrap();
    let cfg = SgdaConfig {
        params,
        primal_step: StepSchedule::Constant { step: 0.1 },
        horizon: 30,
        trace: TraceOptions {
            keep_states: true,
            ..TraceOptions::default()
        },
        force: false,
    };
    let out = smoothed_gda_run(&toy, SolverState::initial(&toy, &[0.0], &[0.0], None).unwrap(), &cfg).unwrap();
    assert!(out.trace.states.iter().all(|s| s.x == [0.0] && s.y == [0.0]));
}

#[test]
fn sgda_matches_plda_in_the_affine_case() {
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let params = derive_parameters(toy.constants(), Regime::General, 40).unwrap();
    let init = SolverState::initial(&toy, &[0.8], &[-0.3], Some(&[0.5])).unwrap();
    let mut pc = PldaConfig::new(params.clone(), 40);
    pc.inner = InnerSolverConfig::with_target(1e-14);
    pc.trace.keep_states = true;
    let plda = run(&toy, init.clone(), &pc).unwrap();
    let gc = SgdaConfig {
        primal_step: StepSchedule::Constant {
            step: 1.0 / (params.lambda + params.r),
        },
        params,
        horizon: 40,
        trace: TraceOptions {
            keep_states: true,
            ..TraceOptions::default()
        },
        force: false,
    };
    let gda = smoothed_gda_run(&toy, init, &gc).unwrap();
    for (a, b) in plda.trace.states.iter().zip(&gda.trace.states) {
        assert_abs_diff_eq!(a.x[0], b.x[0], epsilon = 1e-12);
        assert_abs_diff_eq!(a.y[0], b.y[0], epsilon = 1e-12);
        assert_abs_diff_eq!(a.z[0], b.z[0], epsilon = 1e-12);
    }
}

#[test]
fn sgda_on_cubic_toy_reaches_a_game_stationary_point() {
    let toy = ToyProblem2D::new(ToyId::CubicQuadratic);
    let gs = [(-1.0, 1.0), (-2.0 / 3.0, 2.0 / 3.0), (0.0, 0.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = derive_parameters(toy.constants(), Regime::General, 20_000).unwrap();
    for _ in 0..3 {
        let x0 = rng.random_range(-1.0..1.0);
        let y0 = rng.random_range(-1.0..1.0);
        let cfg = SgdaConfig {
            primal_step: StepSchedule::Constant {
                step: 1.0 / (params.lambda + params.r),
            },
            params: params.clone(),
            horizon: 20_000,
            trace: TraceOptions {
                gs: true,
                stride: 100,
                tol: 1e-10,
                ..TraceOptions::default()
            },
            force: false,
        };
        let out = smoothed_gda_run(&toy, SolverState::initial(&toy, &[x0], &[y0], None).unwrap(), &cfg).unwrap();
        let (x, y) = (out.best.x[0], out.best.y[0]);
        assert!(
            gs.iter().any(|p| (p.0 - x).abs() <= 1e-2 && (p.1 - y).abs() <= 1e-2),
            "from ({x0}, {y0}) ended near ({x}, {y})"
        );
    }
}

#[test]
fn grid_search_keeps_the_best_finite_score() {
    let (s, v) = grid_search(&[1.0, 0.5, 0.1], |s| Ok((s - 0.4f64).abs()), |v| *v).unwrap();
    assert_eq!(s, 0.5);
    assert_abs_diff_eq!(v, 0.1, epsilon = 1e-15);
    let (s, _) = grid_search(&[1.0, 0.5], |s| Ok(if s == 0.5 { f64::NAN } else { 3.0 }), |v| *v).unwrap();
    assert_eq!(s, 1.0);
}

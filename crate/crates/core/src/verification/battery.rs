//! The full check battery, grouped by acceptance criterion. Every function is
//! deterministic given its seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::*;
use crate::benchmark::{compare_methods, BenchConfig};
use crate::problem::{sample_point, validate_oracles};
use crate::sets::ConvexSet;
use crate::wdro::{gradient_gate, synth_regression_data, synth_ring_classification, vertex_max, LinregWdro, MlpParams, MlpWdro, NormKind, TargetMode};

/// Results of one acceptance criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub reports: Vec<CheckReport>,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        !self.reports.is_empty() && self.reports.iter().all(|r| r.pass)
    }
}

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "stationary sets of the toy problems"),
    (2, "primal error bound"),
    (3, "sufficient decrease and potential monotonicity"),
    (4, "dual error bound"),
    (5, "rate of the best game residual"),
    (6, "game-to-optimization stationarity conversion"),
    (7, "WDRO linear regression ordering"),
    (8, "MLP gradient gate"),
    (9, "oracle equivalences and projection properties"),
];

/// Runs criterion `id` (1 to 9).
pub fn run_criterion(id: u8, seed: u64) -> Result<CriterionResult> {
    let title = CRITERIA
        .iter()
        .find(|(i, _)| *i == id)
        .map(|(_, t)| t.to_string())
        .ok_or_else(|| Error::InvalidParameter {
            name: "criterion",
            reason: format!("expected 1 to 9, got {id}"),
        })?;
    let reports = match id {
        1 => stationary_sets(),
        2 => primal_error_bound(seed),
        3 => sufficient_decrease(),
        4 => dual_error_bound(seed),
        5 => rate(),
        6 => conversion(),
        7 => wdro_ordering(seed),
        8 => mlp_gate(seed),
        _ => oracle_equivalences(seed),
    };
    Ok(CriterionResult { id, title, reports })
}

fn or_failed(name: &str, instance: &str, r: Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| CheckReport::failed(name, instance, &e))
}

/// Grid `1e-3`, tolerance `1e-2`; a set passes when every reference element is matched
/// within two grid steps and every cluster is explained by a reference element.
pub fn stationary_sets() -> Vec<CheckReport> {
    let step = 1e-3;
    ToyId::ALL
        .iter()
        .map(|&id| {
            let toy = ToyProblem2D::new(id);
            let sets = enumerate_stationary_sets(&toy, step, 1e-2);
            let (mp, gs, os) = sets.agreement();
            let ratio = |ok: bool| if ok { 0.0 } else { 2.0 };
            let mut report =
                CheckReport::from_ratios("stationary_sets", id.as_str(), &[ratio(mp), ratio(gs), ratio(os)], 0.0).with_note(format!(
                    "MP {}, GS {}, OS {} clusters (grid {step:e})",
                    sets.mp.len(),
                    sets.gs.len(),
                    sets.os.len()
                ));
            for (label, found) in [("MP", &sets.mp), ("GS", &sets.gs), ("OS", &sets.os)] {
                let reps: Vec<String> = found
                    .iter()
                    .map(|c| format!("({:.4}, {:.4})", c.representative.0, c.representative.1))
                    .collect();
                report = report.with_note(format!("{label}: {}", reps.join(" ")));
            }
            if id == ToyId::Bilinear {
                report = report.with_note("X truncated to [-2, 2] for the enumeration");
            }
            report
        })
        .collect()
}

fn theory_trace<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    y0: &[f64],
    regime: Regime,
    schedule_horizon: usize,
    steps: usize,
    inner: f64,
) -> Result<(DerivedConstants, IterateTrace)> {
    let params = derive_parameters(problem.constants(), regime, schedule_horizon)?;
    let mut cfg = PldaConfig::new(params.clone(), steps);
    cfg.inner = InnerSolverConfig::with_target(inner);
    cfg.trace.keep_states = true;
    let out = run(problem, SolverState::initial(problem, x0, y0, None)?, &cfg)?;
    Ok((params, out.trace))
}

/// Fifty-step traces of the three toys and thirty steps of linear-regression WDRO
/// (`N = 20, d = 3, ρ = 1, p = 2`), inner target `1e-10`.
pub fn primal_error_bound(seed: u64) -> Vec<CheckReport> {
    let mut out = Vec::new();
    for (id, x0, y0) in [(ToyId::CubicQuadratic, 0.5, 0.0), (ToyId::SineBilinear, 1.0, 0.5), (ToyId::Bilinear, 1.0, 1.0)] {
        let toy = ToyProblem2D::new(id);
        let r = theory_trace(&toy, &[x0], &[y0], Regime::General, 10_000, 50, 1e-10)
            .and_then(|(p, t)| check_primal_error_bound(&toy, &t, &p, 1e-12));
        out.push(or_failed("primal_error_bound", id.as_str(), r));
    }
    let r = synth_regression_data(20, 3, seed, TargetMode::Planted)
        .and_then(|d| LinregWdro::new(d, 1.0, NormKind::L2))
        .and_then(|p| {
            let y0 = vec![1.0 / 20.0; 20];
            let (params, t) = theory_trace(&p, &[0.5, -0.5, 0.25], &y0, Regime::General, 30, 30, 1e-10)?;
            check_primal_error_bound(&p, &t, &params, 1e-12)
        });
    out.push(or_failed("primal_error_bound", "linreg-wdro", r));
    out
}

/// Toy (c) from `(1, 1)` with theory parameters for 50 steps, and the planar KŁ instance
/// from `(0.95, -0.95)`, `y = 0` until both game residuals fall below `1e-8`.
pub fn sufficient_decrease() -> Vec<CheckReport> {
    let mut out = Vec::new();
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let r = theory_trace(&toy, &[1.0], &[1.0], Regime::General, 10_000, 50, 1e-10)
        .and_then(|(p, t)| check_sufficient_decrease(&toy, &t, &p, 1e-12));
    out.push(or_failed("sufficient_decrease", ToyId::Bilinear.as_str(), r));

    let kl = KlInstance::planar();
    let name = kl.name();
    let trace = derive_parameters(kl.constants(), Regime::Kl, 1000).and_then(|p| {
        let mut cfg = PldaConfig::new(p.clone(), 20_000);
        cfg.inner = InnerSolverConfig::with_target(1e-11);
        cfg.trace = TraceOptions {
            gs: true,
            keep_states: true,
            tol: 1e-12,
            early_stop: Some(1e-8),
            ..TraceOptions::default()
        };
        let o = run(&kl, SolverState::initial(&kl, &[0.95, -0.95], &[0.0, 0.0], None)?, &cfg)?;
        Ok((p, o.trace))
    });
    match trace {
        Ok((p, t)) => {
            let steps = t.states.len() - 1;
            out.push(or_failed("sufficient_decrease", &name, check_sufficient_decrease(&kl, &t, &p, 1e-12)));
            out.push(or_failed(
                "potential_monotone",
                &name,
                check_potential_monotone(&kl, &t, &p, 1e-12, 1e-8).map(|r| r.with_note(format!("{steps} steps"))),
            ));
        }
        Err(e) => {
            out.push(CheckReport::failed("sufficient_decrease", &name, &e));
            out.push(CheckReport::failed("potential_monotone", &name, &e));
        }
    }
    out
}

fn samples<P: CompositeMinimaxProblem + ?Sized>(problem: &P, rng: &mut ChaCha8Rng, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..count)
        .map(|_| (sample_point(problem.set_y(), rng, 1.0), sample_point(problem.set_x(), rng, 2.0)))
        .collect()
}

/// 100 random `(y, z)` pairs: the ω form on the planar KŁ instance, the κ form on toy (c).
pub fn dual_error_bound(seed: u64) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kl = KlInstance::planar();
    let s = samples(&kl, &mut rng, 100);
    let r = derive_parameters(kl.constants(), Regime::Kl, 1000).and_then(|p| check_dual_error_bound(&kl, &s, &p, DualBoundForm::Kl, 1e-12));
    let first = or_failed("dual_error_bound_kl", &kl.name(), r);
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let s = samples(&toy, &mut rng, 100);
    let r = derive_parameters(toy.constants(), Regime::General, 1000)
        .and_then(|p| check_dual_error_bound(&toy, &s, &p, DualBoundForm::General, 1e-12));
    vec![first, or_failed("dual_error_bound_general", ToyId::Bilinear.as_str(), r)]
}

pub const RATE_HORIZONS: [usize; 4] = [100, 400, 1600, 6400];

/// Best game residual over `K ∈ {100, 400, 1600, 6400}`: planar KŁ instance (rate 1/2)
/// and toy (c) from `(1, 0.5)` with `β = K^{-1/2}` (rate 1/4).
pub fn rate() -> Vec<CheckReport> {
    let kl = KlInstance::planar();
    let r = SolverState::initial(&kl, &[0.95, -0.95], &[0.0, 0.0], None)
        .and_then(|init| rate_points(&kl, &init, Regime::Kl, &RATE_HORIZONS, 1e-12))
        .and_then(|pts| check_rate_slope(&pts, 0.5, &kl.name()));
    let first = or_failed("rate_slope", &kl.name(), r);
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let r = SolverState::initial(&toy, &[1.0], &[0.5], None)
        .and_then(|init| rate_points(&toy, &init, Regime::General, &RATE_HORIZONS, 1e-12))
        .and_then(|pts| check_rate_slope(&pts, 0.25, ToyId::Bilinear.as_str()));
    vec![first, or_failed("rate_slope", ToyId::Bilinear.as_str(), r)]
}

/// Harvests `(ε, OS)` pairs along a run with the theory `r, λ, α` and an enlarged
/// constant `β` (the theory `β` is so small that ε would span too few decades).
fn harvest<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    y0: &[f64],
    regime: Regime,
    beta: f64,
    steps: usize,
    form: DualBoundForm,
    instance: &str,
) -> Result<CheckReport> {
    let th = derive_parameters(problem.constants(), regime, steps)?;
    let params = DerivedConstants::from_parts(problem.constants(), th.r, th.lambda, th.alpha, beta)?;
    let mut cfg = PldaConfig::new(params.clone(), steps);
    cfg.force = true;
    cfg.inner = InnerSolverConfig::with_target(1e-12);
    cfg.trace.keep_states = true;
    let mut trace = run(problem, SolverState::initial(problem, x0, y0, None)?, &cfg)?.trace;
    trace.states = trace.states.into_iter().step_by(10).collect();
    let pts = harvest_conversion_points(problem, &trace, params.r, 1e-12)?;
    Ok(check_gs_os_conversion(&pts, &params, form, instance)?.with_note(format!("beta forced to {beta}")))
}

/// The scalar KŁ instance (`β = 0.05`, 3000 steps) and toy (c) from `(1, 0.5)`
/// (`β = 0.2`, 10000 steps), every tenth state.
pub fn conversion() -> Vec<CheckReport> {
    let kl = KlInstance::scalar();
    let first = or_failed(
        "gs_os_conversion",
        &kl.name(),
        harvest(&kl, &[1.0], &[0.0], Regime::Kl, 0.05, 3000, DualBoundForm::Kl, &kl.name()),
    );
    let toy = ToyProblem2D::new(ToyId::Bilinear);
    let second = or_failed(
        "gs_os_conversion",
        ToyId::Bilinear.as_str(),
        harvest(&toy, &[1.0], &[0.5], Regime::General, 0.2, 10_000, DualBoundForm::General, ToyId::Bilinear.as_str()),
    );
    vec![first, second]
}

/// Synthetic linear regression (`N = 500, d = 10, ρ = 1`, planted targets) from `θ = 0`
/// and uniform weights, 100 outer iterations per method: the ratio of the final
/// objective of smoothed PLDA to the best grid-searched baseline must be at most 1.
pub fn wdro_ordering(seed: u64) -> Vec<CheckReport> {
    let data = match synth_regression_data(500, 10, seed, TargetMode::Planted) {
        Ok(d) => d,
        Err(e) => return vec![CheckReport::failed("wdro_ordering", "linreg-wdro", &e)],
    };
    let cfg = BenchConfig::default();
    NormKind::ALL
        .iter()
        .map(|&p| {
            let instance = format!("linreg-wdro p={p}");
            let r = LinregWdro::new(data.clone(), 1.0, p).and_then(|prob| {
                let cmp = compare_methods(&prob, &[0.0; 10], &[1.0 / 500.0; 500], &cfg)?;
                let best = cmp.best_baseline();
                Ok(CheckReport::from_ratios(
                    "wdro_ordering",
                    &instance,
                    &[cmp.plda.final_objective / best.final_objective],
                    0.0,
                )
                .with_note(format!(
                    "final g: plda {:.6}, subgrad {:.6} (s0 {}), sgda {:.6} (s0 {})",
                    cmp.plda.final_objective,
                    cmp.subgrad.final_objective,
                    cmp.subgrad.step.unwrap_or(f64::NAN),
                    cmp.sgda.final_objective,
                    cmp.sgda.step.unwrap_or(f64::NAN)
                ))
                .with_note(format!(
                    "best g along the run: plda {:.6}, subgrad {:.6}, sgda {:.6}",
                    cmp.plda.best_objective, cmp.subgrad.best_objective, cmp.sgda.best_objective
                )))
            });
            or_failed("wdro_ordering", &instance, r)
        })
        .collect()
}

/// 50 random parameter points of the ring-classification network for each norm:
/// finite differences at `1e-4` relative and the adjoint identity at `1e-10`.
pub fn mlp_gate(seed: u64) -> Vec<CheckReport> {
    let data = match synth_ring_classification(100, 1.2, seed) {
        Ok(d) => d,
        Err(e) => return vec![CheckReport::failed("mlp_gradient_gate", "mlp-wdro", &e)],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NormKind::ALL
        .iter()
        .map(|&p| {
            let instance = format!("mlp-wdro p={p}");
            let r = MlpWdro::new(data.clone(), 1.0, p).map(|prob| {
                let g = gradient_gate(&prob, &mut rng, 50, 1.0);
                CheckReport::from_ratios(
                    "mlp_gradient_gate",
                    &instance,
                    &[g.jvp_rel_error / 1e-4, g.vjp_rel_error / 1e-4, g.adjoint_error / 1e-10],
                    0.0,
                )
                .with_note(format!(
                    "jvp {:.2e}, vjp {:.2e}, adjoint {:.2e} over {} points ({} parameters)",
                    g.jvp_rel_error,
                    g.vjp_rel_error,
                    g.adjoint_error,
                    g.samples,
                    MlpParams::dim(2)
                ))
            });
            or_failed("mlp_gradient_gate", &instance, r)
        })
        .collect()
}

fn vertex_agreement<P: CompositeMinimaxProblem + ?Sized>(problem: &P, g: impl Fn(&[f64]) -> f64, rng: &mut ChaCha8Rng, scale: f64) -> Result<Vec<f64>> {
    let whole = ConvexSet::whole_space(problem.dim_x());
    (0..100)
        .map(|_| {
            let theta = sample_point(&whole, rng, scale);
            let direct = g(&theta);
            let vm = vertex_max(problem, &theta)?;
            Ok((direct - vm).abs() / (1e-12 * (1.0 + direct.abs())))
        })
        .collect()
}

fn projection_properties(set: &ConvexSet, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let whole = ConvexSet::whole_space(set.dim());
    let mut nonexp = Vec::with_capacity(1000);
    let mut vi = Vec::with_capacity(1000);
    for _ in 0..1000 {
        let a = sample_point(&whole, rng, 3.0);
        let b = sample_point(&whole, rng, 3.0);
        let pa = set.project(&a).expect("dimension matches");
        let pb = set.project(&b).expect("dimension matches");
        let d = linalg::dist(&a, &b);
        nonexp.push(if d > 0.0 { linalg::dist(&pa, &pb) / d / (1.0 + 1e-12) } else { 0.0 });
        // ⟨a - P(a), c - P(a)⟩ ≤ 0 for feasible c
        let c = set.project(&sample_point(&whole, rng, 3.0)).expect("dimension matches");
        let lhs = linalg::dot(&linalg::sub(&a, &pa), &linalg::sub(&c, &pa));
        let scale = 1e-12 * (1.0 + linalg::norm(&a)) * (1.0 + linalg::norm(&c));
        vi.push(lhs.max(0.0) / scale);
    }
    (nonexp, vi)
}

/// `objective_g` against the vertex maximum of `F`, `grad_y` against finite differences
/// on every built problem, and projection properties on 1000 random instances per set.
pub fn oracle_equivalences(seed: u64) -> Vec<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let reg = synth_regression_data(20, 3, seed, TargetMode::Planted);
    let cls = synth_ring_classification(30, 1.2, seed);
    match (&reg, &cls) {
        (Ok(reg), Ok(cls)) => {
            for p in NormKind::ALL {
                let lin = LinregWdro::new(reg.clone(), 1.0, p);
                let r = lin.and_then(|lin| vertex_agreement(&lin, |t| lin.objective_g(t), &mut rng, 1.0));
                let name = format!("linreg-wdro p={p}");
                out.push(or_failed("objective_vertex_max", &name, r.map(|v| CheckReport::from_ratios("objective_vertex_max", &name, &v, 0.0))));
                let mlp = MlpWdro::new(cls.clone(), 1.0, p);
                let r = mlp.and_then(|mlp| vertex_agreement(&mlp, |t| mlp.objective_g(t), &mut rng, 1.0));
                let name = format!("mlp-wdro p={p}");
                out.push(or_failed("objective_vertex_max", &name, r.map(|v| CheckReport::from_ratios("objective_vertex_max", &name, &v, 0.0))));
            }
        }
        _ => {
            let e = reg.as_ref().err().or(cls.as_ref().err()).expect("one failed");
            out.push(CheckReport::failed("objective_vertex_max", "wdro", e));
        }
    }

    let mut grad_y = Vec::new();
    let mut record = |name: String, err: f64| grad_y.push((name, err));
    for id in ToyId::ALL {
        let toy = ToyProblem2D::new(id);
        record(toy.name(), validate_oracles(&toy, &mut rng, 20, 1.0).grad_y_fd_error);
    }
    for kl in [KlInstance::planar(), KlInstance::scalar()] {
        record(kl.name(), validate_oracles(&kl, &mut rng, 20, 1.0).grad_y_fd_error);
    }
    if let (Ok(reg), Ok(cls)) = (&reg, &cls) {
        for p in NormKind::ALL {
            if let Ok(lin) = LinregWdro::new(reg.clone(), 1.0, p) {
                record(lin.name(), validate_oracles(&lin, &mut rng, 20, 1.0).grad_y_fd_error);
            }
            if let Ok(mlp) = MlpWdro::new(cls.clone(), 1.0, p) {
                record(mlp.name(), validate_oracles(&mlp, &mut rng, 20, 1.0).grad_y_fd_error);
            }
        }
    }
    let ratios: Vec<f64> = grad_y.iter().map(|(_, e)| e / 1e-5).collect();
    let mut report = CheckReport::from_ratios("grad_y_finite_differences", "all built problems", &ratios, 0.0);
    for (name, e) in &grad_y {
        report = report.with_note(format!("{name}: {e:.2e}"));
    }
    out.push(report);

    let dim = rng.random_range(2..6);
    let families = [
        ConvexSet::whole_space(dim),
        ConvexSet::cube(dim, -1.0, 2.0),
        ConvexSet::ball(vec![0.5; dim], 1.5).expect("valid ball"),
        ConvexSet::simplex(dim).expect("valid simplex"),
    ];
    for set in &families {
        let (nonexp, vi) = projection_properties(set, &mut rng);
        let name = format!("{} (dim {dim})", set.name());
        out.push(CheckReport::from_ratios("projection_nonexpansive", &name, &nonexp, 0.0));
        out.push(CheckReport::from_ratios("projection_variational_inequality", &name, &vi, 0.0));
    }
    out
}

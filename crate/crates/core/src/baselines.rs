//! Comparison methods: the subgradient method on `min_x max_y F(x, y)` written as
//! `min_x g(x)`, and smoothed GDA with a subgradient primal step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{subgradient_x, CompositeMinimaxProblem, DerivedConstants};
use crate::sets::ConvexSet;
use crate::solver::{validate_parameters, IterateTrace, RunOutput, SolverState, TraceBuilder, TraceMetadata, TraceOptions, TraceRecord};

/// Clarke subgradient of `max_i g_i` at a point: the subgradient of the first piece
/// attaining the maximum (a vertex of the simplex of active weights).
pub fn clarke_subgradient_max(values: &[f64], element_subgrads: &[Vec<f64>]) -> Result<Vec<f64>> {
    if values.is_empty() || values.len() != element_subgrads.len() {
        return Err(Error::InsufficientData(format!(
            "need matching nonempty values and subgradients, got {} and {}",
            values.len(),
            element_subgrads.len()
        )));
    }
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    Ok(element_subgrads[best].clone())
}

/// A weakly convex minimization problem `min_{x∈X} g(x)` with a subgradient oracle.
pub trait MinProblem {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn subgradient(&self, x: &[f64]) -> Vec<f64>;
    fn set_x(&self) -> &ConvexSet;
}

/// `g = max_y F(·, y)` through the max oracle, with the Clarke subgradient
/// `∇c_{y*}(x) ξ`, `ξ ∈ ∂h_{y*}`, at the reported maximizer `y*`.
pub struct MaxFormulation<'a, P: CompositeMinimaxProblem + ?Sized> {
    problem: &'a P,
}

impl<'a, P: CompositeMinimaxProblem + ?Sized> MaxFormulation<'a, P> {
    pub fn new(problem: &'a P) -> Result<Self> {
        let x = problem.set_x().project_unchecked(&vec![0.0; problem.dim_x()]);
        if problem.max_oracle(&x).is_none() {
            return Err(Error::Unsupported(format!("{} has no max oracle", problem.name())));
        }
        Ok(Self { problem })
    }

    fn witness(&self, x: &[f64]) -> (f64, Vec<f64>) {
        self.problem.max_oracle(x).expect("checked at construction")
    }
}

impl<P: CompositeMinimaxProblem + ?Sized> MinProblem for MaxFormulation<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim_x()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.witness(x).0
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, y) = self.witness(x);
        subgradient_x(self.problem, x, &y)
    }
    fn set_x(&self) -> &ConvexSet {
        self.problem.set_x()
    }
}

/// Closure-backed [`MinProblem`].
pub struct FnMinProblem<G, S> {
    pub set: ConvexSet,
    pub value: G,
    pub subgradient: S,
}

impl<G, S> MinProblem for FnMinProblem<G, S>
where
    G: Fn(&[f64]) -> f64,
    S: Fn(&[f64]) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.set.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        (self.subgradient)(x)
    }
    fn set_x(&self) -> &ConvexSet {
        &self.set
    }
}

/// Step size rule `s_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    Constant { step: f64 },
    /// `s0 / √(t + 1)`
    Diminishing { s0: f64 },
}

impl StepSchedule {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant { step } => step,
            StepSchedule::Diminishing { s0 } => s0 / ((t + 1) as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        let s = match *self {
            StepSchedule::Constant { step } => step,
            StepSchedule::Diminishing { s0 } => s0,
        };
        if s > 0.0 && s.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter {
                name: "step",
                reason: format!("must be positive and finite, got {s}"),
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgradientConfig {
    pub schedule: StepSchedule,
    pub horizon: usize,
}

/// `x_{t+1} = proj_X(x_t - s_t ξ_t)`; records `g(x_t)` in the `F` and objective columns.
pub fn subgradient_method<M: MinProblem + ?Sized>(problem: &M, x0: &[f64], cfg: &SubgradientConfig) -> Result<IterateTrace> {
    cfg.schedule.validate()?;
    let start = std::time::Instant::now();
    let set = problem.set_x();
    let mut x = set.project(x0)?;
    let record = |k: usize, x: &[f64], dx: Option<f64>| {
        let g = problem.value(x);
        TraceRecord {
            k,
            f_value: g,
            dx_norm: dx,
            dz_norm: None,
            dual_residual: None,
            gs_primal: None,
            gs_dual: None,
            os_residual: None,
            potential: None,
            objective: Some(g),
            certificate: 0.0,
        }
    };
    let mut records = vec![record(0, &x, None)];
    let mut states = vec![];
    for t in 0..cfg.horizon {
        let xi = problem.subgradient(&x);
        let next = set.project_unchecked(&linalg::add_scaled(&x, -cfg.schedule.at(t), &xi));
        let dx = linalg::dist(&x, &next);
        x = next;
        records.push(record(t + 1, &x, Some(dx)));
    }
    states.push(SolverState {
        x: x.clone(),
        y: vec![],
        z: x,
        k: cfg.horizon,
        certificate: 0.0,
    });
    Ok(IterateTrace {
        records,
        states,
        metadata: TraceMetadata {
            method: "subgrad".into(),
            problem: String::new(),
            params: None,
            horizon: cfg.horizon,
            seed: None,
            wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
            notes: vec![format!("schedule: {:?}", cfg.schedule)],
        },
    })
}

/// Configuration of a smoothed GDA run; `params` supplies `r`, `α` and `β` (λ is unused).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdaConfig {
    pub params: DerivedConstants,
    pub primal_step: StepSchedule,
    pub horizon: usize,
    pub trace: TraceOptions,
    pub force: bool,
}

/// The smoothed PLDA loop with the prox-linear step replaced by
/// `x' = proj_X(x - c (ξ + r(x - z)))`, `ξ ∈ ∂_x F(x, y)` by the chain rule.
pub fn smoothed_gda_run<P: CompositeMinimaxProblem + ?Sized>(problem: &P, init: SolverState, cfg: &SgdaConfig) -> Result<RunOutput> {
    if cfg.horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1".into(),
        });
    }
    cfg.primal_step.validate()?;
    let mut notes = validate_parameters(&cfg.params, cfg.force)?;
    notes.push(format!("primal step: {:?}", cfg.primal_step));
    let p = &cfg.params;
    let mut tb = TraceBuilder::new(problem, p.r, p.alpha, cfg.trace, cfg.horizon);
    let mut state = init;
    let mut stop = tb.push(None, &state)?;
    while !stop && state.k < cfg.horizon {
        let c = cfg.primal_step.at(state.k);
        let mut g = subgradient_x(problem, &state.x, &state.y);
        linalg::axpy(p.r, &linalg::sub(&state.x, &state.z), &mut g);
        let x = problem.set_x().project_unchecked(&linalg::add_scaled(&state.x, -c, &g));
        let gy = problem.grad_y(&x, &state.y);
        let y = problem.set_y().project_unchecked(&linalg::add_scaled(&state.y, p.alpha, &gy));
        let z: Vec<f64> = state.z.iter().zip(&x).map(|(zi, xi)| zi + p.beta * (xi - zi)).collect();
        let next = SolverState {
            x,
            y,
            z,
            k: state.k + 1,
            certificate: 0.0,
        };
        stop = tb.push(Some(&state), &next)?;
        state = next;
    }
    Ok(tb.finish("sgda", Some(cfg.params.clone()), state, notes))
}

/// Base step sizes searched for the baselines, each used with the `1/√(t+1)` decay.
pub const STEP_GRID: [f64; 5] = [1.0, 0.5, 0.1, 0.05, 0.01];

/// Runs `run` for every step in `grid` and keeps the run with the smallest score
/// (ties keep the earlier step). Failed runs and non-finite scores are skipped.
pub fn grid_search<T, R, S>(grid: &[f64], mut run: R, score: S) -> Result<(f64, T)>
where
    R: FnMut(f64) -> Result<T>,
    S: Fn(&T) -> f64,
{
    let mut best: Option<(f64, f64, T)> = None;
    let mut last_err = None;
    for &s in grid {
        match run(s) {
            Ok(out) => {
                let v = score(&out);
                if v.is_finite() && best.as_ref().map_or(true, |(b, _, _)| v < *b) {
                    best = Some((v, s, out));
                }
            }
            Err(e) => {
                log::warn!("grid search: step {s} failed: {e}");
                last_err = Some(e);
            }
        }
    }
    best.map(|(_, s, t)| (s, t))
        .ok_or_else(|| last_err.unwrap_or_else(|| Error::InsufficientData("empty step grid".into())))
}

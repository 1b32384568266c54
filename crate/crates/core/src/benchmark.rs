//! Equal-budget comparison of smoothed PLDA against the two baselines, with the
//! baselines' base step chosen by grid search on the final objective.

use serde::{Deserialize, Serialize};

use crate::baselines::{grid_search, smoothed_gda_run, subgradient_method, MaxFormulation, SgdaConfig, StepSchedule, SubgradientConfig, STEP_GRID};
use crate::error::{Error, Result};
use crate::problem::{CompositeMinimaxProblem, DerivedConstants};
use crate::prox_linear::InnerSolverConfig;
use crate::solver::{run, IterateTrace, PldaConfig, SolverState, TraceOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Outer iterations for every method.
    pub horizon: usize,
    /// `(r, λ, α, β)` of smoothed PLDA; smoothed GDA reuses `r`, `α` and `β`.
    pub r: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    pub inner: InnerSolverConfig,
    /// Base steps `s0` of the `s0/√(t+1)` schedules searched for the baselines.
    pub grid: Vec<f64>,
}

impl Default for BenchConfig {
    /// The practical setting `λ = 10, α = 0.1, β = 0.01` with `r = 1` and 100 steps.
    fn default() -> Self {
        let mut inner = InnerSolverConfig::with_target(1e-6);
        inner.max_iters = 1000;
        inner.strict = false;
        Self {
            horizon: 100,
            r: 1.0,
            lambda: 10.0,
            alpha: 0.1,
            beta: 0.01,
            inner,
            grid: STEP_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// Selected base step (baselines only).
    pub step: Option<f64>,
    pub final_objective: f64,
    pub best_objective: f64,
    pub final_x: Vec<f64>,
    pub trace: IterateTrace,
}

/// One grid point of a baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub method: String,
    pub step: f64,
    pub final_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub plda: MethodResult,
    pub subgrad: MethodResult,
    pub sgda: MethodResult,
    pub grid: Vec<GridEntry>,
}

impl Comparison {
    /// Smallest final objective among the two baselines.
    pub fn best_baseline(&self) -> &MethodResult {
        if self.sgda.final_objective < self.subgrad.final_objective {
            &self.sgda
        } else {
            &self.subgrad
        }
    }
}

fn objective<P: CompositeMinimaxProblem + ?Sized>(problem: &P, x: &[f64]) -> f64 {
    problem.max_oracle(x).map_or(f64::NAN, |(v, _)| v)
}

fn result_of<P: CompositeMinimaxProblem + ?Sized>(problem: &P, method: &str, step: Option<f64>, trace: IterateTrace, x: Vec<f64>) -> MethodResult {
    let final_objective = objective(problem, &x);
    let best_objective = trace
        .records
        .iter()
        .filter_map(|r| r.objective)
        .fold(final_objective, |a, b| if b < a { b } else { a });
    MethodResult {
        method: method.to_string(),
        step,
        final_objective,
        best_objective,
        final_x: x,
        trace,
    }
}

/// Runs smoothed PLDA (forced parameters), the subgradient method on `max_y F(·, y)` and
/// smoothed GDA from the same start for `cfg.horizon` outer iterations each. The problem
/// needs a max oracle, which supplies the objective `max_y F(x, y)`.
pub fn compare_methods<P: CompositeMinimaxProblem + ?Sized>(problem: &P, x0: &[f64], y0: &[f64], cfg: &BenchConfig) -> Result<Comparison> {
    if cfg.grid.is_empty() {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: "needs at least one step".into(),
        });
    }
    let params = DerivedConstants::practical(problem.constants(), cfg.r, cfg.lambda, cfg.alpha, cfg.beta)?;
    let trace = TraceOptions {
        objective: true,
        ..TraceOptions::default()
    };
    let init = SolverState::initial(problem, x0, y0, None)?;

    let mut plda_cfg = PldaConfig::new(params.clone(), cfg.horizon);
    plda_cfg.inner = cfg.inner;
    plda_cfg.trace = trace;
    plda_cfg.force = true;
    let out = run(problem, init.clone(), &plda_cfg)?;
    let plda = result_of(problem, "plda", None, out.trace, out.last.x);

    let mut grid = Vec::new();
    let max_form = MaxFormulation::new(problem)?;
    let (s_sub, sub) = grid_search(
        &cfg.grid,
        |s| {
            let sc = SubgradientConfig {
                schedule: StepSchedule::Diminishing { s0: s },
                horizon: cfg.horizon,
            };
            let tr = subgradient_method(&max_form, &init.x, &sc)?;
            let x = tr.states.last().map(|st| st.x.clone()).unwrap_or_default();
            let res = result_of(problem, "subgrad", Some(s), tr, x);
            grid.push(GridEntry {
                method: "subgrad".into(),
                step: s,
                final_objective: res.final_objective,
            });
            Ok(res)
        },
        |r| r.final_objective,
    )?;
    let (s_gda, gda) = grid_search(
        &cfg.grid,
        |s| {
            let gc = SgdaConfig {
                params: params.clone(),
                primal_step: StepSchedule::Diminishing { s0: s },
                horizon: cfg.horizon,
                trace,
                force: true,
            };
            let out = smoothed_gda_run(problem, init.clone(), &gc)?;
            let res = result_of(problem, "sgda", Some(s), out.trace, out.last.x);
            grid.push(GridEntry {
                method: "sgda".into(),
                step: s,
                final_objective: res.final_objective,
            });
            Ok(res)
        },
        |r| r.final_objective,
    )?;
    log::info!("grid search picked s0 = {s_sub} (subgrad) and s0 = {s_gda} (sgda)");
    Ok(Comparison {
        plda,
        subgrad: sub,
        sgda: gda,
        grid,
    })
}

//! Smoothed proximal linear descent ascent.
//!
//! One step from `(x, y, z)`:
//! 1. `x' = argmin_{X} h_y(c_y(x) + J(· - x)) + λ/2‖· - x‖² + r/2‖· - z‖²`,
//! 2. `y' = proj_Y(y + α ∇_y F(x', y))`,
//! 3. `z' = z + β (x' - z)`.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problem::{evaluate_f, CompositeMinimaxProblem, DerivedConstants};
use crate::prox_linear::{solve_subproblem, InnerSolverConfig, SubproblemSpec};
use crate::stationarity::{evaluate_potential, gs_residuals, os_residual};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub k: usize,
    /// Certificate of the subproblem solve that produced `x` (0 for the initial state).
    pub certificate: f64,
}

impl SolverState {
    /// Projects `x0` and `y0` onto `X` and `Y`; `z0` defaults to `x0`.
    pub fn initial<P: CompositeMinimaxProblem + ?Sized>(problem: &P, x0: &[f64], y0: &[f64], z0: Option<&[f64]>) -> Result<Self> {
        let x = problem.set_x().project(x0)?;
        let y = problem.set_y().project(y0)?;
        let z = match z0 {
            Some(z) => {
                check_dim("z0", problem.dim_x(), z.len())?;
                z.to_vec()
            }
            None => x.clone(),
        };
        Ok(Self {
            x,
            y,
            z,
            k: 0,
            certificate: 0.0,
        })
    }
}

/// Rejects parameters outside the convergence theory unless `force` is set, in which
/// case the violations are logged and returned.
pub fn validate_parameters(params: &DerivedConstants, force: bool) -> Result<Vec<String>> {
    let violations = params.theory_violations();
    if violations.is_empty() {
        return Ok(violations);
    }
    if !force {
        return Err(Error::InvalidParameter {
            name: "params",
            reason: format!("outside the theoretical ranges ({}); pass force to run anyway", violations.join("; ")),
        });
    }
    for v in &violations {
        log::info!("running with parameters outside the theory: {v}");
    }
    Ok(violations)
}

/// One iteration of the method, in the order x, then y, then z.
pub fn step<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    state: &SolverState,
    params: &DerivedConstants,
    inner: &InnerSolverConfig,
) -> Result<SolverState> {
    let spec = SubproblemSpec::new(problem, &state.x, &state.y, &state.z, params.lambda, params.r)?;
    let sol = solve_subproblem(problem, &spec, inner)?;
    let x = sol.x;
    let g = problem.grad_y(&x, &state.y);
    let y = problem.set_y().project_unchecked(&linalg::add_scaled(&state.y, params.alpha, &g));
    let z: Vec<f64> = state.z.iter().zip(&x).map(|(zi, xi)| zi + params.beta * (xi - zi)).collect();
    Ok(SolverState {
        x,
        y,
        z,
        k: state.k + 1,
        certificate: sol.certificate,
    })
}

/// Which diagnostics to compute, and how often.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// Diagnostics are computed at `k ≡ 0 (mod stride)` and at the last iterate.
    pub stride: usize,
    pub gs: bool,
    pub os: bool,
    pub potential: bool,
    /// Record `f(x) = max_y F(x, y)` when the problem has a max oracle.
    pub objective: bool,
    /// Keep every `(x, y, z)` in the trace.
    pub keep_states: bool,
    /// Accuracy of the auxiliary solves behind the diagnostics.
    pub tol: f64,
    /// Stop once both game residuals are at most this value.
    pub early_stop: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            stride: 1,
            gs: false,
            os: false,
            potential: false,
            objective: false,
            keep_states: false,
            tol: 1e-9,
            early_stop: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    /// `F(x^k, y^k)`
    pub f_value: f64,
    /// `‖x^{k-1} - x^k‖`
    pub dx_norm: Option<f64>,
    /// `‖z^{k-1} - z^k‖`
    pub dz_norm: Option<f64>,
    /// `‖y^{k-1} - y^k‖ / α`, the projected dual gradient length of the last step.
    pub dual_residual: Option<f64>,
    pub gs_primal: Option<f64>,
    pub gs_dual: Option<f64>,
    pub os_residual: Option<f64>,
    pub potential: Option<f64>,
    pub objective: Option<f64>,
    pub certificate: f64,
}

impl TraceRecord {
    pub fn gs_max(&self) -> Option<f64> {
        Some(self.gs_primal?.max(self.gs_dual?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub method: String,
    pub problem: String,
    pub params: Option<DerivedConstants>,
    pub horizon: usize,
    pub seed: Option<u64>,
    pub wall_time_ms: f64,
    /// Free-form notes, e.g. a grid-searched step size.
    pub notes: Vec<String>,
}

/// Per-iteration records plus run metadata. `records[0]` describes the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateTrace {
    pub records: Vec<TraceRecord>,
    pub states: Vec<SolverState>,
    pub metadata: TraceMetadata,
}

pub const CSV_COLUMNS: [&str; 9] = [
    "k",
    "F",
    "dx_norm",
    "dz_norm",
    "dual_residual",
    "gs_primal",
    "gs_dual",
    "os_residual",
    "potential",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl IterateTrace {
    /// Writes one row per record. When any record has an objective, `objective` and its
    /// running minimum `best_objective` are appended.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let with_obj = self.records.iter().any(|r| r.objective.is_some());
        let mut header = CSV_COLUMNS.join(",");
        if with_obj {
            header.push_str(",objective,best_objective");
        }
        writeln!(w, "{header}")?;
        let mut best = f64::INFINITY;
        for r in &self.records {
            write!(
                w,
                "{},{:e},{},{},{},{},{},{},{}",
                r.k,
                r.f_value,
                opt(r.dx_norm),
                opt(r.dz_norm),
                opt(r.dual_residual),
                opt(r.gs_primal),
                opt(r.gs_dual),
                opt(r.os_residual),
                opt(r.potential)
            )?;
            if with_obj {
                if let Some(v) = r.objective {
                    best = best.min(v);
                }
                write!(w, ",{},{}", opt(r.objective), opt(best.is_finite().then_some(best)))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Index of the record minimizing `max(gs_primal, gs_dual)`, else the last record.
    pub fn best_index(&self) -> usize {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.records.iter().enumerate() {
            if let Some(v) = r.gs_max() {
                if best.map_or(true, |(_, b)| v < b) {
                    best = Some((i, v));
                }
            }
        }
        best.map_or(self.records.len().saturating_sub(1), |(i, _)| i)
    }

    pub fn best_gs(&self) -> Option<f64> {
        self.records.iter().filter_map(TraceRecord::gs_max).reduce(f64::min)
    }

    pub fn last_objective(&self) -> Option<f64> {
        self.records.iter().rev().find_map(|r| r.objective)
    }
}

/// Builds a trace record for `state`, reached from `prev` by one step.
pub(crate) fn make_record<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    prev: Option<&SolverState>,
    state: &SolverState,
    r: f64,
    alpha: f64,
    opts: &TraceOptions,
    diagnostics: bool,
) -> Result<TraceRecord> {
    let f_value = evaluate_f(problem, &state.x, &state.y)?;
    let mut rec = TraceRecord {
        k: state.k,
        f_value,
        dx_norm: prev.map(|p| linalg::dist(&p.x, &state.x)),
        dz_norm: prev.map(|p| linalg::dist(&p.z, &state.z)),
        dual_residual: prev.map(|p| linalg::dist(&p.y, &state.y) / alpha),
        gs_primal: None,
        gs_dual: None,
        os_residual: None,
        potential: None,
        objective: None,
        certificate: state.certificate,
    };
    if opts.objective {
        rec.objective = problem.max_oracle(&state.x).map(|(v, _)| v);
    }
    if diagnostics {
        if opts.gs {
            let gs = gs_residuals(problem, &state.x, &state.y, r, opts.tol)?;
            rec.gs_primal = Some(gs.primal);
            rec.gs_dual = Some(gs.dual);
        }
        if opts.os {
            rec.os_residual = Some(os_residual(problem, &state.x, r, opts.tol)?.value);
        }
        if opts.potential {
            rec.potential = Some(evaluate_potential(problem, &state.x, &state.y, &state.z, r, opts.tol)?.phi);
        }
    }
    Ok(rec)
}

/// Configuration of a smoothed PLDA run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PldaConfig {
    pub params: DerivedConstants,
    pub horizon: usize,
    pub inner: InnerSolverConfig,
    pub trace: TraceOptions,
    /// Allow parameters outside the theoretical ranges.
    pub force: bool,
}

impl PldaConfig {
    pub fn new(params: DerivedConstants, horizon: usize) -> Self {
        Self {
            params,
            horizon,
            inner: InnerSolverConfig::default(),
            trace: TraceOptions::default(),
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub trace: IterateTrace,
    /// The state at [`IterateTrace::best_index`].
    pub best: SolverState,
    pub last: SolverState,
}

/// Drives a sequence of states through the shared trace bookkeeping.
pub(crate) struct TraceBuilder<'a, P: CompositeMinimaxProblem + ?Sized> {
    problem: &'a P,
    r: f64,
    alpha: f64,
    opts: TraceOptions,
    horizon: usize,
    records: Vec<TraceRecord>,
    states: Vec<SolverState>,
    best: Option<(f64, SolverState)>,
    start: Instant,
}

impl<'a, P: CompositeMinimaxProblem + ?Sized> TraceBuilder<'a, P> {
    pub(crate) fn new(problem: &'a P, r: f64, alpha: f64, opts: TraceOptions, horizon: usize) -> Self {
        Self {
            problem,
            r,
            alpha,
            opts,
            horizon,
            records: Vec::with_capacity(horizon + 1),
            states: Vec::new(),
            best: None,
            start: Instant::now(),
        }
    }

    /// Records `state`; returns true when the early-stop criterion is met.
    pub(crate) fn push(&mut self, prev: Option<&SolverState>, state: &SolverState) -> Result<bool> {
        let stride = self.opts.stride.max(1);
        let diagnostics = state.k % stride == 0 || state.k == self.horizon;
        let rec = make_record(self.problem, prev, state, self.r, self.alpha, &self.opts, diagnostics)?;
        let gs = rec.gs_max();
        if let Some(v) = gs {
            if self.best.as_ref().map_or(true, |(b, _)| v < *b) {
                self.best = Some((v, state.clone()));
            }
        }
        self.records.push(rec);
        if self.opts.keep_states {
            self.states.push(state.clone());
        }
        Ok(matches!((gs, self.opts.early_stop), (Some(v), Some(t)) if v <= t))
    }

    pub(crate) fn finish(self, method: &str, params: Option<DerivedConstants>, last: SolverState, notes: Vec<String>) -> RunOutput {
        let best = self.best.map(|(_, s)| s).unwrap_or_else(|| last.clone());
        RunOutput {
            trace: IterateTrace {
                records: self.records,
                states: self.states,
                metadata: TraceMetadata {
                    method: method.to_string(),
                    problem: self.problem.name(),
                    params,
                    horizon: self.horizon,
                    seed: None,
                    wall_time_ms: self.start.elapsed().as_secs_f64() * 1e3,
                    notes,
                },
            },
            best,
            last,
        }
    }
}

/// Runs `cfg.horizon` steps from `init`.
pub fn run<P: CompositeMinimaxProblem + ?Sized>(problem: &P, init: SolverState, cfg: &PldaConfig) -> Result<RunOutput> {
    if cfg.horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1".into(),
        });
    }
    let notes = validate_parameters(&cfg.params, cfg.force)?;
    let p = &cfg.params;
    let mut tb = TraceBuilder::new(problem, p.r, p.alpha, cfg.trace, cfg.horizon);
    let mut state = init;
    let mut stop = tb.push(None, &state)?;
    while !stop && state.k < cfg.horizon {
        let next = step(problem, &state, p, &cfg.inner)?;
        stop = tb.push(Some(&state), &next)?;
        state = next;
    }
    Ok(tb.finish("plda", Some(cfg.params.clone()), state, notes))
}

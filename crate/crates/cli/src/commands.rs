use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use splda::baselines::{smoothed_gda_run, subgradient_method, MaxFormulation, SgdaConfig, StepSchedule, SubgradientConfig};
use splda::benchmark::MethodResult;
use splda::solver::run as plda_run;
use splda::stationarity::stationarity_report;
use splda::verification::battery::{run_criterion, CriterionResult, CRITERIA};
use splda::verification::enumerate_stationary_sets;
use splda::wdro::write_decision_boundary;
use splda::{
    compare_methods, derive_parameters, BenchConfig, CheckReport, CompositeMinimaxProblem, DerivedConstants, InnerSolverConfig, IterateTrace,
    MlpWdro, PldaConfig, SolverState, StationarityReport, ToyId, ToyProblem2D, TraceOptions,
};

use crate::config::{Method, RunConfig, Schedule};
use crate::problems::{build, Built, Data};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parameters from the theory schedule, with any explicitly given value substituted.
pub fn resolve_params(problem: &dyn CompositeMinimaxProblem, cfg: &RunConfig) -> Result<DerivedConstants> {
    let m = &cfg.method;
    let explicit = [m.r, m.lambda, m.alpha, m.beta];
    if let [Some(r), Some(l), Some(a), Some(b)] = explicit {
        return Ok(DerivedConstants::practical(problem.constants(), r, l, a, b)?);
    }
    let theory = derive_parameters(problem.constants(), m.regime, cfg.run.horizon)
        .context("theory parameters (give method.r, lambda, alpha and beta to bypass)")?;
    if explicit.iter().all(Option::is_none) {
        return Ok(theory);
    }
    Ok(DerivedConstants::practical(
        problem.constants(),
        m.r.unwrap_or(theory.r),
        m.lambda.unwrap_or(theory.lambda),
        m.alpha.unwrap_or(theory.alpha),
        m.beta.unwrap_or(theory.beta),
    )?)
}

/// Inner solver settings; the WDRO families default to the non-strict benchmark setting.
pub fn resolve_inner(built: &Built, cfg: &RunConfig) -> InnerSolverConfig {
    let mut inner = if built.is_wdro() {
        BenchConfig::default().inner
    } else {
        InnerSolverConfig::default()
    };
    if let Some(t) = cfg.run.inner_target {
        inner.target = Some(t);
    }
    if let Some(t) = cfg.run.inner_max_iters {
        inner.max_iters = t;
    }
    if let Some(s) = cfg.run.inner_strict {
        inner.strict = s;
    }
    inner
}

fn trace_options(cfg: &RunConfig) -> TraceOptions {
    TraceOptions {
        stride: cfg.run.stride.max(1),
        gs: cfg.run.gs,
        os: cfg.run.os,
        potential: cfg.run.potential,
        objective: cfg.run.objective,
        tol: cfg.run.tol,
        ..TraceOptions::default()
    }
}

fn start(built: &Built, cfg: &RunConfig) -> Result<SolverState> {
    let x0 = cfg.run.x0.clone().unwrap_or_else(|| built.x0.clone());
    let y0 = cfg.run.y0.clone().unwrap_or_else(|| built.y0.clone());
    Ok(SolverState::initial(built.problem.as_ref(), &x0, &y0, None)?)
}

fn schedule(cfg: &RunConfig, default: f64) -> StepSchedule {
    let step = cfg.method.step.unwrap_or(default);
    match cfg.method.schedule {
        Schedule::Constant => StepSchedule::Constant { step },
        Schedule::Diminishing => StepSchedule::Diminishing { s0: step },
    }
}

#[derive(Debug, Serialize)]
pub struct Metrics {
    pub objective: Option<f64>,
    /// Mean squared error (regression) on the training data.
    pub mse: Option<f64>,
    /// Training accuracy (classification).
    pub accuracy: Option<f64>,
}

fn metrics(built: &Built, x: &[f64]) -> Metrics {
    let objective = built.problem.max_oracle(x).map(|(v, _)| v);
    match &built.data {
        Data::Regression(d) => Metrics {
            objective,
            mse: Some(d.mse(x)),
            accuracy: None,
        },
        Data::Classification(d) => Metrics {
            objective,
            mse: None,
            accuracy: MlpWdro::accuracy(d, x).ok(),
        },
        Data::None => Metrics {
            objective,
            mse: None,
            accuracy: None,
        },
    }
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub version: &'static str,
    pub config: RunConfig,
    pub problem: String,
    pub params: Option<DerivedConstants>,
    pub best_iterate: SolverState,
    pub last_iterate: SolverState,
    pub metrics: Metrics,
    pub residuals: Option<StationarityReport>,
    pub wall_time_ms: f64,
    pub check_reports: Vec<CheckReport>,
    pub notes: Vec<String>,
}

/// Runs one method and writes `trace.csv`, `summary.json` and `run.conf` to `run.out`.
pub fn solve(cfg: &RunConfig) -> Result<SolveSummary> {
    let built = build(&cfg.problem)?;
    let p = built.problem.as_ref();
    let init = start(&built, cfg)?;
    let t0 = Instant::now();
    let (trace, best, last, params): (IterateTrace, SolverState, SolverState, Option<DerivedConstants>) = match cfg.method.name {
        Method::Plda => {
            let params = resolve_params(p, cfg)?;
            let mut pc = PldaConfig::new(params.clone(), cfg.run.horizon);
            pc.inner = resolve_inner(&built, cfg);
            pc.trace = trace_options(cfg);
            pc.force = cfg.method.force;
            let out = plda_run(p, init, &pc)?;
            (out.trace, out.best, out.last, Some(params))
        }
        Method::Sgda => {
            let params = resolve_params(p, cfg)?;
            let gc = SgdaConfig {
                primal_step: schedule(cfg, 1.0 / (params.lambda + params.r)),
                params: params.clone(),
                horizon: cfg.run.horizon,
                trace: trace_options(cfg),
                force: cfg.method.force,
            };
            let out = smoothed_gda_run(p, init, &gc)?;
            (out.trace, out.best, out.last, Some(params))
        }
        Method::Subgrad => {
            let form = MaxFormulation::new(p)?;
            let sc = SubgradientConfig {
                schedule: schedule(cfg, 0.1),
                horizon: cfg.run.horizon,
            };
            let trace = subgradient_method(&form, &init.x, &sc)?;
            let last = trace.states.last().cloned().context("empty subgradient trace")?;
            (trace, last.clone(), last, None)
        }
    };
    let wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut notes = trace.metadata.notes.clone();
    let residuals = match (&params, cfg.method.name) {
        (Some(pr), Method::Plda | Method::Sgda) if pr.r > pr.l => match stationarity_report(p, &best.x, &best.y, pr.r, cfg.run.tol) {
            Ok(r) => Some(r),
            Err(e) => {
                notes.push(format!("residuals at the best iterate unavailable: {e}"));
                None
            }
        },
        _ => None,
    };

    let out = &cfg.run.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    trace.write_csv(BufWriter::new(File::create(out.join("trace.csv"))?))?;
    fs::write(out.join("run.conf"), cfg.to_text())?;
    let summary = SolveSummary {
        version: VERSION,
        config: cfg.clone(),
        problem: p.name(),
        params,
        metrics: metrics(&built, &last.x),
        best_iterate: best,
        last_iterate: last,
        residuals,
        wall_time_ms,
        check_reports: Vec::new(),
        notes,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct BenchRow {
    pub method: String,
    pub step: Option<f64>,
    pub final_objective: f64,
    pub best_objective: f64,
    pub metrics: Metrics,
    pub final_x: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchSummary {
    pub version: &'static str,
    pub config: RunConfig,
    pub bench: BenchConfig,
    pub problem: String,
    pub results: Vec<BenchRow>,
    pub grid: Vec<splda::benchmark::GridEntry>,
    pub wall_time_ms: f64,
    pub check_reports: Vec<CheckReport>,
}

/// All three methods with the grid-searched baselines; writes `comparison.csv`,
/// `grid.csv`, one trace per method, `summary.json` and, for the network, a
/// decision-boundary grid.
pub fn bench(cfg: &RunConfig) -> Result<BenchSummary> {
    let built = build(&cfg.problem)?;
    let p = built.problem.as_ref();
    let mut bc = BenchConfig {
        horizon: cfg.run.horizon,
        inner: resolve_inner(&built, cfg),
        ..BenchConfig::default()
    };
    let m = &cfg.method;
    bc.r = m.r.unwrap_or(bc.r);
    bc.lambda = m.lambda.unwrap_or(bc.lambda);
    bc.alpha = m.alpha.unwrap_or(bc.alpha);
    bc.beta = m.beta.unwrap_or(bc.beta);
    let init = start(&built, cfg)?;
    let t0 = Instant::now();
    let cmp = compare_methods(p, &init.x, &init.y, &bc)?;
    let wall_time_ms = t0.elapsed().as_secs_f64() * 1e3;

    let out = &cfg.run.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let methods: [&MethodResult; 3] = [&cmp.plda, &cmp.subgrad, &cmp.sgda];
    let mut table = String::from("method,step,final_objective,best_objective\n");
    for r in methods {
        table.push_str(&format!(
            "{},{},{:e},{:e}\n",
            r.method,
            r.step.map(|s| s.to_string()).unwrap_or_default(),
            r.final_objective,
            r.best_objective
        ));
        r.trace.write_csv(BufWriter::new(File::create(out.join(format!("trace_{}.csv", r.method)))?))?;
    }
    fs::write(out.join("comparison.csv"), table)?;
    let mut grid = String::from("method,step,final_objective\n");
    for g in &cmp.grid {
        grid.push_str(&format!("{},{},{:e}\n", g.method, g.step, g.final_objective));
    }
    fs::write(out.join("grid.csv"), grid)?;
    if let Data::Classification(_) = built.data {
        let named: Vec<(&str, &[f64])> = methods.iter().map(|r| (r.method.as_str(), r.final_x.as_slice())).collect();
        write_decision_boundary(BufWriter::new(File::create(out.join("boundary.csv"))?), &named, -4.0, 4.0, 81)?;
    }
    fs::write(out.join("run.conf"), cfg.to_text())?;

    let best = cmp.best_baseline();
    let ordering = CheckReport::from_ratios("ordering", &p.name(), &[cmp.plda.final_objective / best.final_objective], 0.0)
        .with_note(format!("best baseline: {} with s0 = {:?}", best.method, best.step));
    let summary = BenchSummary {
        version: VERSION,
        config: cfg.clone(),
        bench: bc,
        problem: p.name(),
        results: methods
            .iter()
            .map(|r| BenchRow {
                method: r.method.clone(),
                step: r.step,
                final_objective: r.final_objective,
                best_objective: r.best_objective,
                metrics: metrics(&built, &r.final_x),
                final_x: r.final_x.clone(),
            })
            .collect(),
        grid: cmp.grid.clone(),
        wall_time_ms,
        check_reports: vec![ordering],
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// `all` or a comma-separated list of criterion numbers.
pub fn parse_suite(s: &str) -> Result<Vec<u8>> {
    if s.trim() == "all" {
        return Ok(CRITERIA.iter().map(|(i, _)| *i).collect());
    }
    let mut ids = Vec::new();
    for part in s.split(',') {
        let id: u8 = part.trim().parse().with_context(|| format!("invalid suite entry `{part}`"))?;
        if !(1..=9).contains(&id) {
            bail!("suite entries must be 1 to 9, got {id}");
        }
        if !ids.contains(&id) {
            ids.push(id);
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub version: &'static str,
    pub seed: u64,
    pub suite: Vec<u8>,
    pub pass: bool,
    pub criteria: Vec<CriterionResult>,
}

/// Runs the selected criteria on worker threads; results keep suite order, and the
/// report holds no timings so that reruns are byte-identical.
pub fn verify(suite: &[u8], seed: u64) -> Result<VerifyReport> {
    let criteria = std::thread::scope(|s| {
        let handles: Vec<_> = suite.iter().map(|&id| s.spawn(move || run_criterion(id, seed))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(splda::Error::Unsupported("criterion panicked".into()))))
            .collect::<splda::Result<Vec<_>>>()
    })?;
    Ok(VerifyReport {
        version: VERSION,
        seed,
        suite: suite.to_vec(),
        pass: criteria.iter().all(CriterionResult::pass),
        criteria,
    })
}

pub fn verify_json(report: &VerifyReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

fn fmt_cluster(c: &splda::verification::StationaryCluster, grid: f64) -> String {
    let wide = |r: (f64, f64)| r.1 - r.0 > 4.0 * grid;
    let coord = |v: f64, r: (f64, f64)| {
        if wide(r) {
            format!("[{:.4}, {:.4}]", r.0, r.1)
        } else {
            format!("{:.4}", v + 0.0)
        }
    };
    format!("({}, {})", coord(c.representative.0, c.x_range), coord(c.representative.1, c.y_range))
}

/// Text listing of the enumerated MP, GS and OS sets of a toy.
pub fn toy(id: ToyId, grid: f64, tol: f64) -> Result<String> {
    if !(grid > 0.0 && tol > 0.0) {
        bail!("grid and tol must be positive");
    }
    let sets = enumerate_stationary_sets(&ToyProblem2D::new(id), grid, tol);
    let mut out = format!("toy {} (grid {grid:e}, tol {tol:e}, r = {})\n", id.as_str(), sets.r);
    if let Some((lo, hi)) = sets.truncated_x {
        out.push_str(&format!("X truncated to [{lo}, {hi}]\n"));
    }
    for (label, found) in [("MP", &sets.mp), ("GS", &sets.gs), ("OS", &sets.os)] {
        let items: Vec<String> = found.iter().map(|c| fmt_cluster(c, grid)).collect();
        out.push_str(&format!("{label} = {{{}}}\n", items.join(", ")));
    }
    let (mp, gs, os) = sets.agreement();
    out.push_str(&format!("matches reference: MP {mp}, GS {gs}, OS {os}\n"));
    Ok(out)
}

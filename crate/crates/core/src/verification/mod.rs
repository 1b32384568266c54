//! Numerical checks of the error bounds, the sufficient decrease property, the rate
//! and the GS-to-OS conversion along solver traces, plus brute-force stationary sets.
//!
//! Every inequality `lhs ≤ rhs` is evaluated with the certificates of the auxiliary
//! solves folded into `rhs`, and summarized by the worst ratio `lhs / rhs`.

pub mod battery;
pub mod enumerate;
pub mod instances;

use serde::{Deserialize, Serialize};

pub use enumerate::{enumerate_stationary_sets, StationaryCluster, StationarySets};
pub use instances::{KlInstance, RefElement, ReferenceSets, ToyId, ToyProblem2D};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{derive_parameters, CompositeMinimaxProblem, DerivedConstants, Regime};
use crate::prox_linear::InnerSolverConfig;
use crate::solver::{run, IterateTrace, PldaConfig, SolverState, TraceOptions};
use crate::stationarity::{compute_x_r, evaluate_potential, gs_residuals, os_residual, proximal_point, ProximalConfig};

/// Outcome of one numerical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub instance: String,
    /// Number of inequality instances evaluated.
    pub samples: usize,
    pub worst_ratio: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn from_ratios(name: &str, instance: &str, ratios: &[f64], tolerance: f64) -> Self {
        let worst = ratios.iter().copied().fold(0.0, |a: f64, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) });
        Self {
            name: name.to_string(),
            instance: instance.to_string(),
            samples: ratios.len(),
            worst_ratio: worst,
            tolerance,
            pass: worst <= 1.0 + tolerance,
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// A check that could not run counts as failed.
    pub fn failed(name: &str, instance: &str, err: &Error) -> Self {
        Self {
            name: name.to_string(),
            instance: instance.to_string(),
            samples: 0,
            worst_ratio: f64::INFINITY,
            tolerance: 0.0,
            pass: false,
            notes: vec![err.to_string()],
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} [{}] {}: worst ratio {:.4e} over {} (tol {:.1e})",
            if self.pass { "PASS" } else { "FAIL" },
            self.instance,
            self.name,
            self.worst_ratio,
            self.samples,
            self.tolerance
        )
    }
}

/// `lhs / rhs` for `lhs ≤ rhs`: at most 1 exactly when the inequality holds.
pub fn inequality_ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_nan() || rhs.is_nan() {
        return f64::NAN;
    }
    if rhs > 0.0 {
        return (lhs / rhs).max(0.0);
    }
    if lhs <= rhs {
        // both nonpositive
        if lhs == 0.0 {
            0.0
        } else {
            rhs / lhs
        }
    } else {
        1.0 + (lhs - rhs) / rhs.abs().max(f64::MIN_POSITIVE)
    }
}

/// Default tolerance on worst ratios of inequality checks.
pub const RATIO_TOL: f64 = 1e-6;

fn states_of(trace: &IterateTrace) -> Result<&[SolverState]> {
    if trace.states.len() < 2 {
        return Err(Error::InsufficientData("trace must keep at least two states".into()));
    }
    Ok(&trace.states)
}

/// `‖x^{k+1} - x_r(y^k, z^k)‖ ≤ ζ ‖x^k - x^{k+1}‖` along a trace.
///
/// Slack: the inexact `x^{k+1}` moves the left side by its certificate `e` and the right
/// side by `ζ e`; `x_r` carries its own certificate.
pub fn check_primal_error_bound<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    trace: &IterateTrace,
    params: &DerivedConstants,
    tol: f64,
) -> Result<CheckReport> {
    let states = states_of(trace)?;
    let mut ratios = Vec::with_capacity(states.len() - 1);
    let mut worst_cert: f64 = 0.0;
    for w in states.windows(2) {
        let (s, t) = (&w[0], &w[1]);
        let xr = compute_x_r(problem, &s.y, &s.z, params.r, tol)?;
        let lhs = linalg::dist(&t.x, &xr.x);
        let rhs = params.zeta * linalg::dist(&s.x, &t.x) + (params.zeta + 1.0) * t.certificate + xr.certificate;
        worst_cert = worst_cert.max(t.certificate);
        ratios.push(inequality_ratio(lhs, rhs));
    }
    Ok(CheckReport::from_ratios("primal_error_bound", &problem.name(), &ratios, RATIO_TOL)
        .with_note(format!("zeta = {}, largest step certificate {:.2e}", params.zeta, worst_cert)))
}

/// Terms of the sufficient decrease inequality at one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecreaseTerms {
    pub k: usize,
    pub phi_k: f64,
    pub phi_next: f64,
    pub dx_term: f64,
    pub dy_term: f64,
    pub dz_term: f64,
    pub negative_term: f64,
    pub slack: f64,
}

/// `Φ^k - Φ^{k+1} ≥ λ/16‖Δx‖² + 1/(8α)‖y^k - y_+^k‖² + 4r/(7β)‖Δz‖² - 28rβ‖x_r*(z^k) - x_r(y_+^k, z^k)‖²`
/// along a trace, with `y_+^k = proj_Y(y^k + α ∇_y F(x_r(y^k, z^k), y^k))`.
///
/// Each term is bounded in the direction that makes the check harder to pass, and the
/// enclosures of `Φ` plus `10 (1 + |Φ^k|) e_{k+1}` for the inexact step form the slack.
pub fn sufficient_decrease_terms<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    trace: &IterateTrace,
    params: &DerivedConstants,
    tol: f64,
) -> Result<Vec<DecreaseTerms>> {
    let states = states_of(trace)?;
    let p = params;
    let pots = states
        .iter()
        .map(|s| evaluate_potential(problem, &s.x, &s.y, &s.z, p.r, tol))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(states.len() - 1);
    for k in 0..states.len() - 1 {
        let (s, t) = (&states[k], &states[k + 1]);
        let xr = &pots[k].x_r;
        let gy = problem.grad_y(&xr.x, &s.y);
        let y_plus = problem.set_y().project_unchecked(&linalg::add_scaled(&s.y, p.alpha, &gy));
        // error in y_+ from the inexact x_r
        let ey = p.alpha * p.l * xr.certificate;
        let xr_plus = compute_x_r(problem, &y_plus, &s.z, p.r, tol)?;
        let prox = &pots[k].prox;
        let neg = linalg::dist(&prox.x, &xr_plus.x) + prox.certificate + xr_plus.certificate + p.sigma2 * ey;
        let dy = (linalg::dist(&s.y, &y_plus) - ey).max(0.0);
        out.push(DecreaseTerms {
            k: s.k,
            phi_k: pots[k].phi,
            phi_next: pots[k + 1].phi,
            dx_term: p.lambda / 16.0 * linalg::dist(&s.x, &t.x).powi(2),
            dy_term: dy * dy / (8.0 * p.alpha),
            dz_term: 4.0 * p.r / (7.0 * p.beta) * linalg::dist(&s.z, &t.z).powi(2),
            negative_term: 28.0 * p.r * p.beta * neg * neg,
            slack: pots[k].uncertainty + pots[k + 1].uncertainty + 10.0 * (1.0 + pots[k].phi.abs()) * t.certificate,
        });
    }
    Ok(out)
}

pub fn check_sufficient_decrease<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    trace: &IterateTrace,
    params: &DerivedConstants,
    tol: f64,
) -> Result<CheckReport> {
    let terms = sufficient_decrease_terms(problem, trace, params, tol)?;
    let ratios: Vec<f64> = terms
        .iter()
        .map(|t| {
            let rhs = t.dx_term + t.dy_term + t.dz_term - t.negative_term;
            inequality_ratio(rhs, t.phi_k - t.phi_next + t.slack)
        })
        .collect();
    let mut report = CheckReport::from_ratios("sufficient_decrease", &problem.name(), &ratios, RATIO_TOL);
    let violations = params.theory_violations();
    if !violations.is_empty() {
        report = report.with_note(format!("parameters outside the hypotheses: {}", violations.join("; ")));
    }
    Ok(report)
}

/// `Φ^{k+1} ≤ Φ^k` (within the enclosure slack) for every step taken while the game
/// residual of `(x^k, y^k)` is at least `floor`.
pub fn check_potential_monotone<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    trace: &IterateTrace,
    params: &DerivedConstants,
    tol: f64,
    floor: f64,
) -> Result<CheckReport> {
    let terms = sufficient_decrease_terms(problem, trace, params, tol)?;
    let states = states_of(trace)?;
    let mut ratios = Vec::new();
    for (t, s) in terms.iter().zip(states) {
        let gs = gs_residuals(problem, &s.x, &s.y, params.r, tol)?;
        if gs.max() < floor {
            break;
        }
        ratios.push(inequality_ratio(t.phi_next - t.phi_k, t.slack));
    }
    Ok(CheckReport::from_ratios("potential_monotone", &problem.name(), &ratios, RATIO_TOL)
        .with_note(format!("steps checked until the game residual drops below {floor:e}")))
}

/// Form of the dual error bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualBoundForm {
    /// `‖x_r*(z) - x_r(y_+(z), z)‖ ≤ ω ‖y - y_+(z)‖^{1/(2θ)}`
    Kl,
    /// `‖x_r*(z) - x_r(y_+(z), z)‖² ≤ κ ‖y - y_+(z)‖`
    General,
}

/// Dual error bound on sampled `(y, z)` pairs.
pub fn check_dual_error_bound<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    samples: &[(Vec<f64>, Vec<f64>)],
    params: &DerivedConstants,
    form: DualBoundForm,
    tol: f64,
) -> Result<CheckReport> {
    let p = params;
    let (constant, power) = match form {
        DualBoundForm::Kl => {
            let kl = p.kl.ok_or_else(|| Error::InvalidParameter {
                name: "form",
                reason: "the KŁ form needs theta and mu".into(),
            })?;
            (p.omega.expect("omega with kl"), 1.0 / (2.0 * kl.theta))
        }
        DualBoundForm::General => (
            p.kappa.ok_or_else(|| Error::InvalidParameter {
                name: "form",
                reason: "the general form needs a bounded Y".into(),
            })?,
            1.0,
        ),
    };
    let cfg = ProximalConfig {
        tol,
        ..ProximalConfig::default()
    };
    let mut ratios = Vec::with_capacity(samples.len());
    for (y, z) in samples {
        let xr = compute_x_r(problem, y, z, p.r, tol)?;
        let gy = problem.grad_y(&xr.x, y);
        let y_plus = problem.set_y().project_unchecked(&linalg::add_scaled(y, p.alpha, &gy));
        let ey = p.alpha * p.l * xr.certificate;
        let xr_plus = compute_x_r(problem, &y_plus, z, p.r, tol)?;
        let prox = proximal_point(problem, z, p.r, &cfg, Some(y))?;
        let slack = prox.certificate + xr_plus.certificate + p.sigma2 * ey;
        let lhs = (linalg::dist(&prox.x, &xr_plus.x) - slack).max(0.0);
        let step = linalg::dist(y, &y_plus) + ey;
        let ratio = match form {
            DualBoundForm::Kl => inequality_ratio(lhs, constant * step.powf(power)),
            DualBoundForm::General => inequality_ratio(lhs * lhs, constant * step),
        };
        ratios.push(ratio);
    }
    let name = match form {
        DualBoundForm::Kl => "dual_error_bound_kl",
        DualBoundForm::General => "dual_error_bound_general",
    };
    Ok(CheckReport::from_ratios(name, &problem.name(), &ratios, RATIO_TOL).with_note(format!("constant = {constant:.6e}")))
}

/// One harvested `(ε-GS, OS)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionPoint {
    /// `max(gs_primal, gs_dual)`
    pub gs: f64,
    pub os: f64,
    pub os_certificate: f64,
}

/// Game and optimization residuals at every kept state of a trace.
pub fn harvest_conversion_points<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    trace: &IterateTrace,
    r: f64,
    tol: f64,
) -> Result<Vec<ConversionPoint>> {
    trace
        .states
        .iter()
        .map(|s| {
            let gs = gs_residuals(problem, &s.x, &s.y, r, tol)?;
            let os = os_residual(problem, &s.x, r, tol)?;
            Ok(ConversionPoint {
                gs: gs.max() + gs.certificate,
                os: os.value,
                os_certificate: os.certificate,
            })
        })
        .collect()
}

/// Explicit GS-to-OS bound at residual `ε`: `√(κ(1+αL/r)) ε^{1/2} + σ2(1+αL/r) ε + ε/r`
/// in general, `(ω + σ2)(ε(1+αL/r))^{min(1, 1/(2θ))} + ε/r` under the KŁ property.
pub fn conversion_bound(params: &DerivedConstants, form: DualBoundForm, eps: f64) -> Option<f64> {
    let p = params;
    let growth = 1.0 + p.alpha * p.l / p.r;
    match form {
        DualBoundForm::General => Some((p.kappa? * growth).sqrt() * eps.sqrt() + p.sigma2 * growth * eps + eps / p.r),
        DualBoundForm::Kl => {
            let kl = p.kl?;
            Some((p.omega? + p.sigma2) * (eps * growth).powf((1.0 / (2.0 * kl.theta)).min(1.0)) + eps / p.r)
        }
    }
}

/// Least-squares slope of `log v` against `log u`.
pub fn log_log_slope(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() as f64;
    let lu: Vec<f64> = u.iter().map(|a| a.ln()).collect();
    let lv: Vec<f64> = v.iter().map(|a| a.ln()).collect();
    let mu = lu.iter().sum::<f64>() / n;
    let mv = lv.iter().sum::<f64>() / n;
    let sxy: f64 = lu.iter().zip(&lv).map(|(a, b)| (a - mu) * (b - mv)).sum();
    let sxx: f64 = lu.iter().map(|a| (a - mu).powi(2)).sum();
    sxy / sxx
}

/// Fits `log OS` against `log ε` over points spanning at least three decades and checks
/// that the exponent is at least the theoretical one minus 0.1, and that every point
/// obeys the explicit bound of [`conversion_bound`] up to its certificate.
///
/// Points with `OS ≤ 10 · certificate` carry no information and are dropped from the fit.
pub fn check_gs_os_conversion(points: &[ConversionPoint], params: &DerivedConstants, form: DualBoundForm, instance: &str) -> Result<CheckReport> {
    let exponent = match form {
        DualBoundForm::General => 0.5,
        DualBoundForm::Kl => {
            let kl = params.kl.ok_or_else(|| Error::InvalidParameter {
                name: "form",
                reason: "the KŁ form needs theta and mu".into(),
            })?;
            (1.0 / (2.0 * kl.theta)).min(1.0)
        }
    };
    let mut bound_ratios = Vec::new();
    for pt in points {
        let b = conversion_bound(params, form, pt.gs).ok_or_else(|| Error::InvalidParameter {
            name: "params",
            reason: "missing the dual bound constant".into(),
        })?;
        bound_ratios.push(inequality_ratio(pt.os - pt.os_certificate, b));
    }
    let fit: Vec<&ConversionPoint> = points.iter().filter(|p| p.gs > 0.0 && p.os > 10.0 * p.os_certificate).collect();
    if fit.len() < 3 {
        return Err(Error::InsufficientData(format!("only {} informative points", fit.len())));
    }
    let lo = fit.iter().map(|p| p.gs).fold(f64::INFINITY, f64::min);
    let hi = fit.iter().map(|p| p.gs).fold(0.0, f64::max);
    let decades = (hi / lo).log10();
    if decades < 3.0 {
        return Err(Error::InsufficientData(format!("game residuals span only {decades:.2} decades")));
    }
    let slope = log_log_slope(
        &fit.iter().map(|p| p.gs).collect::<Vec<_>>(),
        &fit.iter().map(|p| p.os).collect::<Vec<_>>(),
    );
    let required = exponent - 0.1;
    let slope_ratio = if slope > 0.0 { required / slope } else { f64::INFINITY };
    let mut ratios = bound_ratios;
    ratios.push(slope_ratio);
    Ok(CheckReport::from_ratios("gs_os_conversion", instance, &ratios, RATIO_TOL).with_note(format!(
        "fitted exponent {slope:.4} (theory {exponent}), {} points over {decades:.2} decades",
        fit.len()
    )))
}

/// Best game residual per horizon, for [`check_rate_slope`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub horizon: usize,
    pub beta: f64,
    pub best_gs: f64,
}

/// Runs the solver with theory parameters for each horizon and returns the best game
/// residual of each run (evaluated at every iterate).
pub fn rate_points<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    init: &SolverState,
    regime: Regime,
    horizons: &[usize],
    tol: f64,
) -> Result<Vec<RatePoint>> {
    horizons
        .iter()
        .map(|&k| {
            let params = derive_parameters(problem.constants(), regime, k)?;
            let mut cfg = PldaConfig::new(params.clone(), k);
            cfg.inner = InnerSolverConfig::with_target(1e-12);
            cfg.trace = TraceOptions {
                gs: true,
                tol,
                ..TraceOptions::default()
            };
            let out = run(problem, init.clone(), &cfg)?;
            Ok(RatePoint {
                horizon: k,
                beta: params.beta,
                best_gs: out.trace.best_gs().unwrap_or(f64::INFINITY),
            })
        })
        .collect()
}

/// Log-log slope of the best game residual against `K` must be at most `-(rate - 0.1)`.
/// Residuals are floored at `1e-16`; an all-zero sequence passes vacuously.
pub fn check_rate_slope(points: &[RatePoint], rate: f64, instance: &str) -> Result<CheckReport> {
    if points.len() < 2 {
        return Err(Error::InsufficientData("need at least two horizons".into()));
    }
    let notes = points
        .iter()
        .map(|p| format!("K = {}: beta = {:.3e}, best GS = {:.3e}", p.horizon, p.beta, p.best_gs))
        .collect::<Vec<_>>()
        .join("; ");
    if points.iter().all(|p| p.best_gs == 0.0) {
        return Ok(CheckReport::from_ratios("rate_slope", instance, &[0.0], 0.0).with_note("already stationary"));
    }
    let ks: Vec<f64> = points.iter().map(|p| p.horizon as f64).collect();
    let eps: Vec<f64> = points.iter().map(|p| p.best_gs.max(1e-16)).collect();
    let slope = log_log_slope(&ks, &eps);
    let required = rate - 0.1;
    let ratio = if slope < 0.0 { required / -slope } else { f64::INFINITY };
    Ok(CheckReport::from_ratios("rate_slope", instance, &[ratio], 0.0)
        .with_note(format!("fitted slope {slope:.4}, required <= {:.2}", -required))
        .with_note(notes))
}

//! Stationarity measures and the auxiliary functions behind them.
//!
//! With `F_r(x, y, z) = F(x, y) + r/2 ‖x - z‖²`:
//! - `x_r(y, z) = argmin_{x∈X} F_r(x, y, z)` and `d_r(y, z) = F_r(x_r(y, z), y, z)`,
//! - `p_r(z) = min_{x∈X} f(x) + r/2 ‖x - z‖² = max_{y∈Y} d_r(y, z)`, attained at `x_r*(z)`,
//! - the game residuals `r ‖x - x_r(y, x)‖` and `dist(0, -∇_y F(x, y) + N_Y(y))`,
//! - the optimization residual `‖prox_{f/r + ι_X}(x) - x‖ = ‖x_r*(x) - x‖`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::problem::{subgradient_x, CompositeMinimaxProblem};
use crate::prox_linear::{solve_subproblem, InnerSolverConfig, SubproblemSpec};

/// A computed minimizer together with a proven bound on its distance to the exact one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxPoint {
    pub x: Vec<f64>,
    pub certificate: f64,
    pub iterations: usize,
}

fn check_r<P: CompositeMinimaxProblem + ?Sized>(problem: &P, r: f64) -> Result<f64> {
    let l = problem.constants().l();
    if !(r > l) {
        return Err(Error::InvalidParameter {
            name: "r",
            reason: format!("must exceed L = {l}, got {r}"),
        });
    }
    Ok(l)
}

/// `F_r(x, y, z)`
pub fn smoothed_value<P: CompositeMinimaxProblem + ?Sized>(problem: &P, x: &[f64], y: &[f64], z: &[f64], r: f64) -> f64 {
    problem.h_eval(&problem.c_eval(x, y), y) + 0.5 * r * linalg::dist(x, z).powi(2)
}

/// `x_r(y, z)` by majorize-minimize: repeated prox-linear steps with weight `λ' = L`,
/// each a `κ`-contraction with `κ² = 2L / (2r)`, stopped once the certified distance
/// `(κ ‖x_{t+1} - x_t‖ + ε_inner) / (1 - κ)` is at most `tol`, or once the inner
/// solves hit their rounding floor (the certificate then exceeds `tol`).
pub fn compute_x_r<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    y: &[f64],
    z: &[f64],
    r: f64,
    tol: f64,
) -> Result<ProxPoint> {
    compute_x_r_from(problem, y, z, r, tol, None)
}

/// As [`compute_x_r`], warm started from `start` when given.
pub fn compute_x_r_from<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    y: &[f64],
    z: &[f64],
    r: f64,
    tol: f64,
    start: Option<&[f64]>,
) -> Result<ProxPoint> {
    let l = check_r(problem, r)?;
    check_dim("x_r dual point", problem.dim_y(), y.len())?;
    check_dim("x_r center", problem.dim_x(), z.len())?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let kappa = ((2.0 * l) / (2.0 * r)).sqrt();
    let inner_target = (0.25 * tol * (1.0 - kappa)).max(1e-15);
    let cfg = InnerSolverConfig::with_target(inner_target);
    let mut x = problem.set_x().project_unchecked(start.unwrap_or(z));
    let max_iters = 2_000;
    let mut cert = f64::INFINITY;
    for it in 1..=max_iters {
        let spec = SubproblemSpec::new(problem, &x, y, z, l, r)?;
        let sol = solve_subproblem(problem, &spec, &cfg)?;
        let d = linalg::dist(&sol.x, &x);
        cert = (kappa * d + sol.certificate) / (1.0 - kappa);
        x = sol.x;
        // below the inner rounding floor further sweeps cannot sharpen the bound
        let floored = sol.certificate > inner_target && kappa * d <= sol.certificate;
        if cert <= tol || d == 0.0 || floored {
            return Ok(ProxPoint {
                x,
                certificate: cert,
                iterations: it,
            });
        }
    }
    Err(Error::BudgetExhausted {
        context: "compute_x_r",
        iterations: max_iters,
        certificate: cert,
    })
}

/// Upper bound `F_r(x̂) - d_r(y, z) ≤ ‖g‖ e` for a certified approximation `x̂` of
/// `x_r(y, z)`, with `g ∈ ∂_x F_r(x̂, y, z)`.
pub fn value_gap_bound<P: CompositeMinimaxProblem + ?Sized>(problem: &P, p: &ProxPoint, y: &[f64], z: &[f64], r: f64) -> f64 {
    if p.certificate == 0.0 {
        return 0.0;
    }
    let mut g = subgradient_x(problem, &p.x, y);
    linalg::axpy(r, &linalg::sub(&p.x, z), &mut g);
    linalg::norm(&g) * p.certificate
}

/// `d_r(y, z)` enclosed in `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualValue {
    pub upper: f64,
    pub lower: f64,
    pub x_r: ProxPoint,
}

pub fn dual_function<P: CompositeMinimaxProblem + ?Sized>(problem: &P, y: &[f64], z: &[f64], r: f64, tol: f64) -> Result<DualValue> {
    let x_r = compute_x_r(problem, y, z, r, tol)?;
    let upper = smoothed_value(problem, &x_r.x, y, z, r);
    let lower = upper - value_gap_bound(problem, &x_r, y, z, r);
    Ok(DualValue { upper, lower, x_r })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsResiduals {
    /// `r ‖x - x_r(y, x)‖ = ‖∇_z d_r(y, z)‖` at `z = x`.
    pub primal: f64,
    /// `dist(0, -∇_y F(x, y) + N_Y(y))`
    pub dual: f64,
    /// Bound on the error of `primal` (exact for `dual`).
    pub certificate: f64,
    pub x_r: Vec<f64>,
}

impl GsResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual)
    }
}

pub fn gs_residuals<P: CompositeMinimaxProblem + ?Sized>(problem: &P, x: &[f64], y: &[f64], r: f64, tol: f64) -> Result<GsResiduals> {
    check_dim("x", problem.dim_x(), x.len())?;
    check_dim("y", problem.dim_y(), y.len())?;
    let x_r = compute_x_r(problem, y, x, r, tol)?;
    let dual = problem.set_y().normal_cone_distance(y, &problem.grad_y(x, y))?;
    Ok(GsResiduals {
        primal: r * linalg::dist(x, &x_r.x),
        dual,
        certificate: r * x_r.certificate,
        x_r: x_r.x,
    })
}

/// `x_r*(z) = prox_{f/r + ι_X}(z)` with the value `p_r(z)` enclosed in `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProximalSolution {
    pub x: Vec<f64>,
    /// Approximate maximizer of `d_r(·, z)`; `x = x_r(y, z)` up to the inner certificate.
    pub y: Vec<f64>,
    /// Proven bound on `‖x - x_r*(z)‖`.
    pub certificate: f64,
    pub upper: f64,
    pub lower: f64,
    pub iterations: usize,
}

/// Iteration budget and accuracy for [`proximal_point`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximalConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for ProximalConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 5_000,
        }
    }
}

/// Computes `x_r*(z)` by accelerated projected gradient ascent on the smooth concave
/// `d_r(·, z)` (gradient `∇_y F(x_r(y, z), y)`, step `1 / L_dr`).
///
/// The certificate comes from the duality gap `f(x̂) + r/2‖x̂ - z‖² - d_r(ŷ, z)`, which
/// bounds `(r - L)/2 ‖x̂ - x_r*(z)‖²`; it needs the problem's max oracle. The best point
/// found is returned even when `cfg.tol` is not reached.
pub fn proximal_point<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    z: &[f64],
    r: f64,
    cfg: &ProximalConfig,
    warm_start: Option<&[f64]>,
) -> Result<ProximalSolution> {
    let l = check_r(problem, r)?;
    check_dim("prox center", problem.dim_x(), z.len())?;
    let sigma1 = r / (r - l);
    let sigma2 = 2.0 * (r + l) / (r - l);
    let l_dr = (sigma1 + r).max((sigma2 + 1.0) * l);
    let set_y = problem.set_y();
    let inner_tol = (cfg.tol * 1e-2).max(1e-13);
    let z_in_x = problem.set_x().project_unchecked(z);
    let primal_value = |x: &[f64]| -> Result<f64> {
        let (fx, _) = problem
            .max_oracle(x)
            .ok_or_else(|| Error::Unsupported(format!("{} has no max oracle", problem.name())))?;
        Ok(fx + 0.5 * r * linalg::dist(x, z).powi(2))
    };
    let y0 = match warm_start {
        Some(y) => set_y.project(y)?,
        None => match problem.max_oracle(&z_in_x) {
            Some((_, y)) => set_y.project_unchecked(&y),
            None => return Err(Error::Unsupported(format!("{} has no max oracle", problem.name()))),
        },
    };

    struct Eval {
        y: Vec<f64>,
        x: ProxPoint,
        lower: f64,
        upper: f64,
        cert: f64,
        grad: Vec<f64>,
    }
    let evaluate = |y: Vec<f64>, start: Option<&[f64]>| -> Result<Eval> {
        let x = compute_x_r_from(problem, &y, z, r, inner_tol, start)?;
        let d_up = smoothed_value(problem, &x.x, &y, z, r);
        let lower = d_up - value_gap_bound(problem, &x, &y, z, r);
        let upper = primal_value(&x.x)?;
        let gap = (upper - lower).max(0.0);
        let cert = (2.0 * gap / (r - l)).sqrt();
        let grad = problem.grad_y(&x.x, &y);
        Ok(Eval {
            y,
            x,
            lower,
            upper,
            cert,
            grad,
        })
    };

    let first = evaluate(y0, Some(&z_in_x))?;
    let mut best_lower = first.lower;
    let mut best_upper = first.upper;
    let mut best = (first.x.x.clone(), first.y.clone(), first.cert);
    let mut cur_y = first.y.clone();
    let mut w = first;
    let mut t = 1.0_f64;
    let mut iters = 0;
    while best.2 > cfg.tol && iters < cfg.max_iters {
        iters += 1;
        let y_next = set_y.project_unchecked(&linalg::add_scaled(&w.y, 1.0 / l_dr, &w.grad));
        let moved = linalg::sub(&y_next, &cur_y);
        let restart = linalg::dot(&linalg::sub(&y_next, &w.y), &moved) < 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let w_y = if restart {
            y_next.clone()
        } else {
            set_y.project_unchecked(&linalg::add_scaled(&y_next, (t - 1.0) / t_next, &moved))
        };
        let stalled = linalg::norm(&moved) <= 1e-15 * (1.0 + linalg::norm(&cur_y));
        t = t_next;
        let warm = w.x.x.clone();
        let at_next = evaluate(y_next.clone(), Some(&warm))?;
        // p_r(z) ≥ d_r(y) for every y, and p_r(z) ≤ P(x) for every feasible x
        best_lower = best_lower.max(at_next.lower);
        best_upper = best_upper.min(at_next.upper);
        let cert = (2.0 * (at_next.upper - best_lower).max(0.0) / (r - l)).sqrt();
        if cert < best.2 {
            best = (at_next.x.x.clone(), at_next.y.clone(), cert);
        }
        cur_y = y_next;
        if stalled {
            break;
        }
        w = if restart { at_next } else { evaluate(w_y, Some(&at_next.x.x))? };
    }
    Ok(ProximalSolution {
        x: best.0,
        y: best.1,
        certificate: best.2,
        upper: best_upper,
        lower: best_lower,
        iterations: iters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OsResidual {
    /// `‖x_r*(x) - x‖`
    pub value: f64,
    /// Bound on the error of `value`.
    pub certificate: f64,
    pub prox: Vec<f64>,
}

/// `‖prox_{f/r + ι_X}(x) - x‖`; needs the problem's max oracle.
pub fn os_residual<P: CompositeMinimaxProblem + ?Sized>(problem: &P, x: &[f64], r: f64, tol: f64) -> Result<OsResidual> {
    let sol = proximal_point(
        problem,
        x,
        r,
        &ProximalConfig {
            tol,
            ..ProximalConfig::default()
        },
        None,
    )?;
    Ok(OsResidual {
        value: linalg::dist(&sol.x, x),
        certificate: sol.certificate,
        prox: sol.x,
    })
}

/// `Φ_r = F_r - 2 d_r + 2 p_r` with its components.
///
/// `uncertainty` bounds `|phi - Φ_r(x, y, z)|`, collecting the enclosures of `d_r` and `p_r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub phi: f64,
    pub f_r: f64,
    pub d_r: f64,
    pub p_r: f64,
    pub uncertainty: f64,
    /// `x_r(y, z)`
    pub x_r: ProxPoint,
    /// `x_r*(z)`
    pub prox: ProximalSolution,
}

pub fn evaluate_potential<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    y: &[f64],
    z: &[f64],
    r: f64,
    tol: f64,
) -> Result<Potential> {
    check_dim("x", problem.dim_x(), x.len())?;
    let f_r = smoothed_value(problem, x, y, z, r);
    let d = dual_function(problem, y, z, r, tol)?;
    let prox = proximal_point(
        problem,
        z,
        r,
        &ProximalConfig {
            tol,
            ..ProximalConfig::default()
        },
        Some(y),
    )?;
    // midpoints of the enclosures, each off by at most half its width
    let d_r = 0.5 * (d.upper + d.lower);
    let p_lower = prox.lower.max(d.lower);
    let p_r = 0.5 * (prox.upper + p_lower);
    let uncertainty = (d.upper - d.lower) + (prox.upper - p_lower).max(0.0);
    Ok(Potential {
        phi: f_r - 2.0 * d_r + 2.0 * p_r,
        f_r,
        d_r,
        p_r,
        uncertainty,
        x_r: d.x_r,
        prox,
    })
}

/// Game and optimization residuals at `(x, y)` for a fixed `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub r: f64,
    pub gs_primal: f64,
    pub gs_dual: f64,
    pub gs_certificate: f64,
    pub os: Option<f64>,
    pub os_certificate: Option<f64>,
    /// `x_r(y, x)`
    pub x_r: Vec<f64>,
    /// `x_r*(x)`, when the max oracle is available.
    pub prox: Option<Vec<f64>>,
}

pub fn stationarity_report<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    x: &[f64],
    y: &[f64],
    r: f64,
    tol: f64,
) -> Result<StationarityReport> {
    let gs = gs_residuals(problem, x, y, r, tol)?;
    let os = match os_residual(problem, x, r, tol) {
        Ok(o) => Some(o),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(StationarityReport {
        r,
        gs_primal: gs.primal,
        gs_dual: gs.dual,
        gs_certificate: gs.certificate,
        os: os.as_ref().map(|o| o.value),
        os_certificate: os.as_ref().map(|o| o.certificate),
        x_r: gs.x_r,
        prox: os.map(|o| o.prox),
    })
}

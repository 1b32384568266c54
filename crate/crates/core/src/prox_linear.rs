//! The strongly convex prox-linear subproblem
//!
//! ```text
//! min_{x ∈ X}  h_y(c_y(x_k) + J (x - x_k)) + λ/2 ‖x - x_k‖² + r/2 ‖x - z‖²
//! ```
//!
//! solved to a certified distance from its unique minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::problem::CompositeMinimaxProblem;
use crate::sets::ConvexSet;
use crate::support::{SupportBlock, SupportSet};

/// Data of one subproblem: anchor `x_k`, dual point `y`, proximal center `z` and weights.
///
/// The Jacobian at the anchor is assembled once, so the inner solvers never evaluate `c`
/// away from `x_k`.
#[derive(Debug, Clone)]
pub struct SubproblemSpec {
    pub x_k: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub lambda: f64,
    pub r: f64,
    /// `c_y(x_k)`
    pub c0: Vec<f64>,
    /// `∇c_y(x_k)ᵀ` as an `m × n` matrix.
    pub jac: DenseMatrix,
}

impl SubproblemSpec {
    pub fn new<P: CompositeMinimaxProblem + ?Sized>(
        problem: &P,
        x_k: &[f64],
        y: &[f64],
        z: &[f64],
        lambda: f64,
        r: f64,
    ) -> Result<Self> {
        check_dim("subproblem anchor", problem.dim_x(), x_k.len())?;
        check_dim("subproblem dual point", problem.dim_y(), y.len())?;
        check_dim("subproblem center", problem.dim_x(), z.len())?;
        if !(lambda >= 0.0 && r >= 0.0 && lambda + r > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("need λ, r ≥ 0 with λ + r > 0, got λ = {lambda}, r = {r}"),
            });
        }
        Ok(Self {
            x_k: x_k.to_vec(),
            y: y.to_vec(),
            z: z.to_vec(),
            lambda,
            r,
            c0: problem.c_eval(x_k, y),
            jac: problem.jacobian(x_k, y),
        })
    }

    /// Strong convexity modulus `λ + r`.
    pub fn mu(&self) -> f64 {
        self.lambda + self.r
    }

    /// `(λ x_k + r z) / (λ + r)`, the center of the combined quadratic.
    pub fn center(&self) -> Vec<f64> {
        let mu = self.mu();
        self.x_k
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (self.lambda * a + self.r * b) / mu)
            .collect()
    }

    /// `c_y(x_k) + J (x - x_k)`
    pub fn linearized(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.jac.mul_vec(&linalg::sub(x, &self.x_k));
        linalg::axpy(1.0, &self.c0, &mut out);
        out
    }

    fn quadratics(&self, x: &[f64]) -> f64 {
        0.5 * self.lambda * linalg::dist(x, &self.x_k).powi(2) + 0.5 * self.r * linalg::dist(x, &self.z).powi(2)
    }
}

/// Subproblem objective at `x`.
pub fn model_value<P: CompositeMinimaxProblem + ?Sized>(problem: &P, spec: &SubproblemSpec, x: &[f64]) -> f64 {
    problem.h_eval(&spec.linearized(x), &spec.y) + spec.quadratics(x)
}

/// An element of the subdifferential of the subproblem objective at `x` (without `N_X`).
pub fn model_subgradient<P: CompositeMinimaxProblem + ?Sized>(problem: &P, spec: &SubproblemSpec, x: &[f64]) -> Vec<f64> {
    let xi = problem.h_subgrad(&spec.linearized(x), &spec.y);
    let mut g = spec.jac.tr_mul_vec(&xi);
    for i in 0..g.len() {
        g[i] += spec.lambda * (x[i] - spec.x_k[i]) + spec.r * (x[i] - spec.z[i]);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Closed form when `h` is affine, else a dual method when `h` is a known support
    /// function (ADMM once there are many blocks and `X = R^n`), else subgradient averaging.
    Auto,
    ClosedForm,
    AcceleratedDual,
    /// ADMM on the primal splitting; needs `X = R^n`.
    Admm,
    SubgradientAveraging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerSolverConfig {
    pub method: InnerMethod,
    pub max_iters: usize,
    /// Required distance certificate; `None` selects [`default_inner_target`].
    pub target: Option<f64>,
    /// When false, a solve that misses the target returns its best point (with the
    /// honest certificate) instead of failing.
    #[serde(default = "strict_default")]
    pub strict: bool,
}

fn strict_default() -> bool {
    true
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self {
            method: InnerMethod::Auto,
            max_iters: 20_000,
            target: None,
            strict: true,
        }
    }
}

impl InnerSolverConfig {
    pub fn with_target(target: f64) -> Self {
        Self {
            target: Some(target),
            ..Self::default()
        }
    }
}

/// `min(1e-8, 1e-3 ‖x_k - z_k‖ + 1e-10)`
pub fn default_inner_target(x_k: &[f64], z: &[f64]) -> f64 {
    (1e-3 * linalg::dist(x_k, z) + 1e-10).min(1e-8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    /// Proven bound on the distance from `x` to the exact minimizer.
    pub certificate: f64,
    pub iterations: usize,
    pub method: InnerMethod,
    /// Smallest certificate the method can resolve in floating point; targets below it
    /// are raised to it.
    pub floor: f64,
}

/// Certificates of the dual method come from support deficits of `c0 + J(x - x_k)`,
/// whose rounding error is about `ε_mach ‖q‖ ‖c0‖`; this caps the attainable bound at
/// roughly `√(ε_mach ‖q‖ ‖c0‖ / μ)`.
pub fn rounding_floor(spec: &SubproblemSpec, s: &SupportSet) -> f64 {
    (8.0 * f64::EPSILON * s.lipschitz() * (1.0 + linalg::norm(&spec.c0)) / spec.mu()).sqrt()
}

/// Number of non-affine blocks from which `Auto` prefers ADMM (when `X = R^n`).
pub const ADMM_MIN_BLOCKS: usize = 8;

/// Solves the subproblem and returns a point within `certificate` of the minimizer.
pub fn solve_subproblem<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    spec: &SubproblemSpec,
    cfg: &InnerSolverConfig,
) -> Result<SubproblemSolution> {
    let target = cfg.target.unwrap_or_else(|| default_inner_target(&spec.x_k, &spec.z));
    if !(target > 0.0) {
        return Err(Error::InvalidParameter {
            name: "target",
            reason: format!("inner target must be positive, got {target}"),
        });
    }
    let support = problem.h_support(&spec.y);
    let method = match cfg.method {
        InnerMethod::Auto => match &support {
            Some(s) if s.is_affine() => InnerMethod::ClosedForm,
            Some(s)
                if matches!(problem.set_x(), ConvexSet::WholeSpace { .. })
                    && s.blocks().iter().filter(|b| !matches!(b, SupportBlock::Point(_))).count() >= ADMM_MIN_BLOCKS =>
            {
                InnerMethod::Admm
            }
            Some(_) => InnerMethod::AcceleratedDual,
            None => InnerMethod::SubgradientAveraging,
        },
        m => m,
    };
    let sol = match method {
        InnerMethod::ClosedForm => {
            let s = support
                .filter(SupportSet::is_affine)
                .ok_or_else(|| Error::Unsupported("closed-form solve needs an affine outer function".into()))?;
            closed_form(problem, spec, &s)
        }
        InnerMethod::AcceleratedDual => {
            let s = support.ok_or_else(|| Error::Unsupported("dual solve needs the support set of h".into()))?;
            accelerated_dual(problem, spec, &s, target, cfg.max_iters)
        }
        InnerMethod::Admm => {
            let s = support.ok_or_else(|| Error::Unsupported("ADMM needs the support set of h".into()))?;
            if !matches!(problem.set_x(), ConvexSet::WholeSpace { .. }) {
                return Err(Error::Unsupported("ADMM inner solves need an unconstrained X".into()));
            }
            admm_dual(problem, spec, &s, target, cfg.max_iters)
        }
        InnerMethod::SubgradientAveraging => subgradient_averaging(problem, spec, target, cfg.max_iters),
        InnerMethod::Auto => unreachable!(),
    };
    if sol.certificate > target.max(sol.floor) {
        if !cfg.strict {
            log::debug!("inner solve stopped at certificate {:e} (target {target:e})", sol.certificate);
            return Ok(sol);
        }
        return Err(Error::NonconvergedInner {
            certificate: sol.certificate,
            target,
            iterations: sol.iterations,
        });
    }
    Ok(sol)
}

/// Affine `h(z) = ⟨a, z⟩`: the objective is an isotropic quadratic, so the minimizer is
/// the projection of its unconstrained minimizer onto `X`.
fn closed_form<P: CompositeMinimaxProblem + ?Sized>(problem: &P, spec: &SubproblemSpec, s: &SupportSet) -> SubproblemSolution {
    let a = s.any_point();
    let g = spec.jac.tr_mul_vec(&a);
    let mu = spec.mu();
    let center = spec.center();
    let target: Vec<f64> = center.iter().zip(&g).map(|(c, gi)| c - gi / mu).collect();
    SubproblemSolution {
        x: problem.set_x().project_unchecked(&target),
        certificate: 0.0,
        iterations: 0,
        method: InnerMethod::ClosedForm,
        floor: 0.0,
    }
}

/// Bound on `‖x - x*‖` from a δ-subgradient `v` of the objective at `x`:
/// `‖x - x*‖ ≤ d/μ + √(δ/μ)` with `d = dist(0, v + N_X(x))`.
fn residual_certificate<P: CompositeMinimaxProblem + ?Sized>(problem: &P, x: &[f64], v: &[f64], deficit: f64, mu: f64) -> f64 {
    let neg: Vec<f64> = v.iter().map(|t| -t).collect();
    match problem.set_x().normal_cone_distance(x, &neg) {
        Ok(d) => d / mu + (deficit.max(0.0) / mu).sqrt(),
        Err(_) => f64::INFINITY,
    }
}

/// Distance bound for `x = argmin_X L(·, q)`: the duality gap (the support deficit of
/// `q` at the linearization) or, if smaller, a δ-subgradient residual.
fn dual_certificate<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    spec: &SubproblemSpec,
    s: &SupportSet,
    center: &[f64],
    q: &[f64],
    x: &[f64],
) -> f64 {
    let mu = spec.mu();
    let zl = spec.linearized(x);
    let gap = s.deficit(&zl, q);
    let cert = (2.0 * gap / mu).sqrt();
    let tol = 1e-12 * (1.0 + linalg::norm_inf(&zl));
    let mut qh = q.to_vec();
    let deficit = s.face_project(&zl, &mut qh, tol);
    let mut v = spec.jac.tr_mul_vec(&qh);
    for i in 0..v.len() {
        v[i] += mu * (x[i] - center[i]);
    }
    cert.min(residual_certificate(problem, x, &v, deficit, mu))
}

/// FISTA with adaptive restart on the smooth concave dual
/// `D(q) = min_{x∈X} ⟨q, c0 + J(x - x_k)⟩ + λ/2‖x - x_k‖² + r/2‖x - z‖²` over `q ∈ Q`.
fn accelerated_dual<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    spec: &SubproblemSpec,
    s: &SupportSet,
    target: f64,
    max_iters: usize,
) -> SubproblemSolution {
    let mu = spec.mu();
    let center = spec.center();
    let set_x = problem.set_x();
    let floor = rounding_floor(spec, s);
    let target = target.max(floor);
    let primal = |q: &[f64]| -> Vec<f64> {
        let g = spec.jac.tr_mul_vec(q);
        let t: Vec<f64> = center.iter().zip(&g).map(|(c, gi)| c - gi / mu).collect();
        set_x.project_unchecked(&t)
    };
    let jn = spec.jac.spectral_norm_estimate();
    let lip = jn * jn / mu;
    let mut q = problem.h_subgrad(&spec.linearized(&spec.x_k), &spec.y);
    s.project(&mut q);

    let mut best_x = primal(&q);
    let mut best_cert = f64::INFINITY;
    let certify = |q: &[f64], x: Vec<f64>, best_x: &mut Vec<f64>, best_cert: &mut f64| {
        let cert = dual_certificate(problem, spec, s, &center, q, &x);
        if cert < *best_cert {
            *best_cert = cert;
            *best_x = x;
        }
    };
    certify(&q, best_x.clone(), &mut best_x, &mut best_cert);
    if lip == 0.0 || best_cert <= target {
        return SubproblemSolution {
            x: best_x,
            certificate: if lip == 0.0 { 0.0 } else { best_cert },
            iterations: 0,
            method: InnerMethod::AcceleratedDual,
            floor,
        };
    }

    let step = 1.0 / lip;
    let mut w = q.clone();
    let mut t = 1.0_f64;
    let mut iters = 0;
    let mut last_gain = 0;
    let mut gain_ref = best_cert;
    while iters < max_iters {
        iters += 1;
        let xw = primal(&w);
        let grad = spec.linearized(&xw);
        let mut q_next = linalg::add_scaled(&w, step, &grad);
        s.project(&mut q_next);
        // gradient-based restart: drop momentum when the step opposes the last move
        let moved = linalg::sub(&q_next, &q);
        let restart = linalg::dot(&linalg::sub(&q_next, &w), &moved) < 0.0;
        let t_next = if restart { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        w = if restart {
            q_next.clone()
        } else {
            linalg::add_scaled(&q_next, (t - 1.0) / t_next, &moved)
        };
        t = t_next;
        q = q_next;
        if iters % 5 == 0 || iters == max_iters {
            let x = primal(&q);
            certify(&q, x, &mut best_x, &mut best_cert);
            if best_cert <= target {
                break;
            }
            if best_cert < 0.99 * gain_ref {
                gain_ref = best_cert;
                last_gain = iters;
            } else if iters - last_gain >= 2_000 {
                // stalled at the rounding level
                break;
            }
        }
    }
    SubproblemSolution {
        x: best_x,
        certificate: best_cert,
        iterations: iters,
        method: InnerMethod::AcceleratedDual,
        floor,
    }
}

/// ADMM on the splitting `min σ_Q(v) + μ/2‖x - center‖²` s.t. `v = c0 + J(x - x_k)`, for
/// `X = R^n`. The x-update solves the `n × n` system `(μI + ρJᵀJ) x = …`, so the cost
/// per iteration is two products with `J` however many blocks `Q` has. After the
/// v-update the multiplier is `P_Q(·)`, hence dual feasible, and the usual gap
/// certificate applies to `x(q)`.
fn admm_dual<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    spec: &SubproblemSpec,
    s: &SupportSet,
    target: f64,
    max_iters: usize,
) -> SubproblemSolution {
    let mu = spec.mu();
    let center = spec.center();
    let n = spec.x_k.len();
    let floor = rounding_floor(spec, s);
    let target = target.max(floor);
    let jac = &spec.jac;
    let m = jac.rows();
    let primal = |q: &[f64]| -> Vec<f64> {
        let g = jac.tr_mul_vec(q);
        center.iter().zip(&g).map(|(c, gi)| c - gi / mu).collect()
    };
    // a = c0 - J x_k, so that the linearization is a + J x
    let jxk = jac.mul_vec(&spec.x_k);
    let a: Vec<f64> = spec.c0.iter().zip(&jxk).map(|(c, j)| c - j).collect();
    let mut gram = DenseMatrix::zeros(n, n);
    for i in 0..m {
        let row = jac.row(i);
        for p in 0..n {
            if row[p] == 0.0 {
                continue;
            }
            for q in 0..n {
                gram.set(p, q, gram.get(p, q) + row[p] * row[q]);
            }
        }
    }
    let trace: f64 = (0..n).map(|i| gram.get(i, i)).sum();
    let mut rho = if trace > 0.0 { mu * n as f64 / trace } else { 1.0 };
    let factor = |rho: f64| {
        let mut k = DenseMatrix::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                k.set(p, q, rho * gram.get(p, q) + if p == q { mu } else { 0.0 });
            }
        }
        k
    };
    let mut system = factor(rho);

    let mut q = problem.h_subgrad(&spec.linearized(&spec.x_k), &spec.y);
    s.project(&mut q);
    let mut v = spec.linearized(&spec.x_k);
    let mut best_x = primal(&q);
    let mut best_cert = dual_certificate(problem, spec, s, &center, &q, &best_x);
    let mut iters = 0;
    let mut last_gain = 0;
    let mut gain_ref = best_cert;
    while best_cert > target && iters < max_iters {
        iters += 1;
        // x-update: (μI + ρJᵀJ) x = μ center - Jᵀ(q + ρ(a - v))
        let t: Vec<f64> = (0..m).map(|i| q[i] + rho * (a[i] - v[i])).collect();
        let jt = jac.tr_mul_vec(&t);
        let rhs: Vec<f64> = center.iter().zip(&jt).map(|(c, g)| mu * c - g).collect();
        let x = match linalg::solve_spd(&system, &rhs) {
            Some(x) => x,
            None => break,
        };
        let jx = jac.mul_vec(&x);
        // v-update through the Moreau decomposition, then the multiplier
        let v_old = v.clone();
        let mut w: Vec<f64> = (0..m).map(|i| rho * (a[i] + jx[i]) + q[i]).collect();
        s.project(&mut w);
        for i in 0..m {
            v[i] = a[i] + jx[i] + (q[i] - w[i]) / rho;
        }
        q = w;
        if iters % 5 == 0 || iters == max_iters {
            let xq = primal(&q);
            let cert = dual_certificate(problem, spec, s, &center, &q, &xq);
            if cert < best_cert {
                best_cert = cert;
                best_x = xq.clone();
            }
            if best_cert < 0.99 * gain_ref {
                gain_ref = best_cert;
                last_gain = iters;
            } else if iters - last_gain >= 2_000 {
                break;
            }
            // residual balancing
            let primal_res = (0..m).map(|i| (a[i] + jx[i] - v[i]).powi(2)).sum::<f64>().sqrt();
            let dual_res = rho * linalg::norm(&jac.tr_mul_vec(&linalg::sub(&v, &v_old)));
            if primal_res > 10.0 * dual_res || dual_res > 10.0 * primal_res {
                rho *= if primal_res > dual_res { 2.0 } else { 0.5 };
                system = factor(rho);
            }
        }
    }
    SubproblemSolution {
        x: best_x,
        certificate: best_cert,
        iterations: iters,
        method: InnerMethod::Admm,
        floor,
    }
}

/// Projected subgradient steps `2/(μ(t+1))` with weights `∝ t`; the lower bound minimizes
/// the weighted average of the linearizations of `h` plus the exact quadratics.
fn subgradient_averaging<P: CompositeMinimaxProblem + ?Sized>(
    problem: &P,
    spec: &SubproblemSpec,
    target: f64,
    max_iters: usize,
) -> SubproblemSolution {
    let mu = spec.mu();
    let center = spec.center();
    let n = spec.x_k.len();
    let set_x = problem.set_x();
    let mut x = set_x.project_unchecked(&spec.x_k);
    let mut avg = x.clone();
    let mut weight = 0.0;
    // Σ w_t Jᵀξ_t and Σ w_t (h(z_t) - ⟨Jᵀξ_t, x_t⟩)
    let mut g_acc = vec![0.0; n];
    let mut s_acc = 0.0;
    let mut cert = f64::INFINITY;
    let mut iters = 0;
    while iters < max_iters {
        iters += 1;
        let t = iters as f64;
        let zl = spec.linearized(&x);
        let hv = problem.h_eval(&zl, &spec.y);
        let jt = spec.jac.tr_mul_vec(&problem.h_subgrad(&zl, &spec.y));
        g_acc.iter_mut().zip(&jt).for_each(|(a, b)| *a += t * b);
        s_acc += t * (hv - linalg::dot(&jt, &x));
        weight += t;
        let w = t / weight;
        avg.iter_mut().zip(&x).for_each(|(a, b)| *a += w * (b - *a));

        let step = 2.0 / (mu * (t + 1.0));
        let mut g = jt;
        for i in 0..n {
            g[i] += mu * (x[i] - center[i]);
        }
        x = set_x.project_unchecked(&linalg::add_scaled(&x, -step, &g));

        if iters % 10 == 0 || iters == max_iters {
            let lb_point: Vec<f64> = center.iter().zip(&g_acc).map(|(c, gi)| c - gi / (weight * mu)).collect();
            let lb_point = set_x.project_unchecked(&lb_point);
            let lb = (linalg::dot(&g_acc, &lb_point) + s_acc) / weight + spec.quadratics(&lb_point);
            let gap = (model_value(problem, spec, &avg) - lb).max(0.0);
            cert = (2.0 * gap / mu).sqrt();
            if cert <= target {
                break;
            }
        }
    }
    SubproblemSolution {
        x: avg,
        certificate: cert,
        iterations: iters,
        method: InnerMethod::SubgradientAveraging,
        floor: 0.0,
    }
}

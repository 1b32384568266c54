//! Problem abstraction for `min_{x∈X} max_{y∈Y} F(x, y)` with `F(·, y) = h_y ∘ c_y`,
//! together with the constants that drive the parameter theory.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::sets::ConvexSet;
use crate::support::SupportSet;

/// Oracle bundle for a composite nonconvex-concave minimax problem.
///
/// `c_y : Rⁿ → Rᵐ` is smooth with an `L_c`-Lipschitz Jacobian, `h_y : Rᵐ → R` is convex
/// and `L_h`-Lipschitz, and `F(x, ·)` is concave with an `L`-Lipschitz gradient.
/// Implementations must be pure: every oracle is a function of its arguments only.
pub trait CompositeMinimaxProblem: Send + Sync {
    fn name(&self) -> String;

    fn dim_x(&self) -> usize;
    fn dim_y(&self) -> usize;
    /// Dimension `m` of the codomain of `c`.
    fn dim_z(&self) -> usize;

    fn c_eval(&self, x: &[f64], y: &[f64]) -> Vec<f64>;
    /// Directional derivative `∇c_y(x)ᵀ v`.
    fn c_jvp(&self, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64>;
    /// Adjoint product `∇c_y(x) u`.
    fn c_vjp(&self, x: &[f64], y: &[f64], u: &[f64]) -> Vec<f64>;

    fn h_eval(&self, z: &[f64], y: &[f64]) -> f64;
    fn h_subgrad(&self, z: &[f64], y: &[f64]) -> Vec<f64>;

    /// `∇_y F(x, y)`.
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64>;

    fn set_x(&self) -> &ConvexSet;
    fn set_y(&self) -> &ConvexSet;
    fn constants(&self) -> &ProblemConstants;

    /// `f(x) = max_{y∈Y} F(x, y)` together with a maximizing `y`, when tractable.
    fn max_oracle(&self, _x: &[f64]) -> Option<(f64, Vec<f64>)> {
        None
    }

    /// `Q_y` with `h_y = σ_{Q_y}`, when the outer function has that form.
    fn h_support(&self, _y: &[f64]) -> Option<SupportSet> {
        None
    }

    /// Dense Jacobian of `c_y` at `x` (`m × n`). The default assembles it from JVPs.
    fn jacobian(&self, x: &[f64], y: &[f64]) -> DenseMatrix {
        let n = self.dim_x();
        let m = self.dim_z();
        let mut jac = DenseMatrix::zeros(m, n);
        for j in 0..n {
            let col = self.c_jvp(x, y, &linalg::basis(n, j));
            for (i, v) in col.iter().enumerate() {
                jac.set(i, j, *v);
            }
        }
        jac
    }
}

/// `F(x, y) = h_y(c_y(x))`.
pub fn evaluate_f<P: CompositeMinimaxProblem + ?Sized>(p: &P, x: &[f64], y: &[f64]) -> Result<f64> {
    check_dim("x", p.dim_x(), x.len())?;
    check_dim("y", p.dim_y(), y.len())?;
    Ok(p.h_eval(&p.c_eval(x, y), y))
}

/// A subgradient of `F(·, y)` at `x` by the chain rule `∇c_y(x) ξ`, `ξ ∈ ∂h_y(c_y(x))`.
pub fn subgradient_x<P: CompositeMinimaxProblem + ?Sized>(p: &P, x: &[f64], y: &[f64]) -> Vec<f64> {
    let c = p.c_eval(x, y);
    p.c_vjp(x, y, &p.h_subgrad(&c, y))
}

/// Kurdyka-Łojasiewicz data of the dual function: exponent `θ ∈ (0, 1)` and modulus `μ > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlExponent {
    pub theta: f64,
    pub mu: f64,
}

/// Problem knowledge: Lipschitz moduli, optional KŁ data and the diameter of `Y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub l_h: f64,
    pub l_c: f64,
    /// Replaces `L = L_h L_c` when the joint Lipschitz modulus of `∇_y F` is known to differ.
    pub l_override: Option<f64>,
    pub kl: Option<KlExponent>,
    pub diam_y: f64,
}

impl ProblemConstants {
    pub fn new(l_h: f64, l_c: f64, diam_y: f64) -> Result<Self> {
        if !(l_h > 0.0 && l_h.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "l_h",
                reason: format!("must be positive and finite, got {l_h}"),
            });
        }
        if !(l_c > 0.0 && l_c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "l_c",
                reason: format!("must be positive and finite, got {l_c}"),
            });
        }
        if !(diam_y >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "diam_y",
                reason: format!("must be nonnegative, got {diam_y}"),
            });
        }
        Ok(Self {
            l_h,
            l_c,
            l_override: None,
            kl: None,
            diam_y,
        })
    }

    pub fn with_kl(mut self, theta: f64, mu: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "theta",
                reason: format!("KŁ exponent must lie in (0, 1), got {theta}"),
            });
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mu",
                reason: format!("KŁ modulus must be positive, got {mu}"),
            });
        }
        self.kl = Some(KlExponent { theta, mu });
        Ok(self)
    }

    pub fn with_l_override(mut self, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "l_override",
                reason: format!("must be positive and finite, got {l}"),
            });
        }
        self.l_override = Some(l);
        Ok(self)
    }

    /// `L`, the weak-convexity modulus of `F(·, y)` and Lipschitz modulus of `∇_y F`.
    pub fn l(&self) -> f64 {
        self.l_override.unwrap_or(self.l_h * self.l_c)
    }
}

/// Which step-size schedule for `β` the parameter theory should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    General,
    Kl,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Regime::General),
            "kl" => Ok(Regime::Kl),
            other => Err(Error::InvalidParameter {
                name: "regime",
                reason: format!("expected `general` or `kl`, got `{other}`"),
            }),
        }
    }
}

/// Algorithm parameters `(r, λ, α, β)` and every constant derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub l: f64,
    pub r: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Primal error bound constant.
    pub zeta: f64,
    /// Lipschitz modulus of `z ↦ x_r(y, z)`.
    pub sigma1: f64,
    /// Lipschitz modulus of `y ↦ x_r(y, z)`.
    pub sigma2: f64,
    /// `α L ζ`.
    pub eta: f64,
    /// Lipschitz modulus of `∇ d_r`.
    pub l_dr: f64,
    /// Dual error bound constant under the KŁ property.
    pub omega: Option<f64>,
    /// Dual error bound constant for general concave duals (needs bounded `Y`).
    pub kappa: Option<f64>,
    /// Factor converting per-step displacements into a game-stationarity bound.
    pub rho_conv: f64,
    pub kl: Option<KlExponent>,
    pub diam_y: f64,
}

fn zeta_of(l: f64, r: f64, lambda: f64) -> f64 {
    let inv_rl = 1.0 / (r - l);
    let inv_ll = 1.0 / (lambda + l);
    (2.0 * inv_rl + inv_ll) / inv_ll * ((2.0 * l / (lambda + l)).sqrt() + 1.0)
}

impl DerivedConstants {
    /// Computes every dependent constant for explicitly chosen `(r, λ, α, β)`.
    pub fn from_parts(constants: &ProblemConstants, r: f64, lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        let l = constants.l();
        if !(r > l) {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("must exceed L = {l}, got {r}"),
            });
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be positive, got {lambda}"),
            });
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!("must be positive, got {alpha}"),
            });
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                reason: format!("must lie in (0, 1), got {beta}"),
            });
        }
        let zeta = zeta_of(l, r, lambda);
        let sigma1 = r / (r - l);
        let sigma2 = 2.0 * (r + l) / (r - l);
        let eta = alpha * l * zeta;
        let l_dr = (sigma1 + r).max((sigma2 + 1.0) * l);
        let dual_growth = 1.0 + alpha * l * (1.0 + sigma2);
        let omega = constants.kl.map(|kl| {
            std::f64::consts::SQRT_2 / (r - l).sqrt() * (dual_growth / (alpha * kl.mu)).powf(1.0 / (2.0 * kl.theta))
        });
        let kappa = constants
            .diam_y
            .is_finite()
            .then(|| (1.0 + alpha * l * sigma2 + alpha * l) / (alpha * (r - l)) * constants.diam_y);
        let rho_conv = ((1.0 + eta) / alpha).max(r * (zeta + sigma2 * (eta + 1.0) + sigma1));
        Ok(Self {
            l,
            r,
            lambda,
            alpha,
            beta,
            zeta,
            sigma1,
            sigma2,
            eta,
            l_dr,
            omega,
            kappa,
            rho_conv,
            kl: constants.kl,
            diam_y: constants.diam_y,
        })
    }

    /// Practical parameters that need not satisfy `r > L` (any `r, λ > 0`). When
    /// `r ≤ L` the constants of the analysis are undefined and set to NaN; such runs
    /// must be forced.
    pub fn practical(constants: &ProblemConstants, r: f64, lambda: f64, alpha: f64, beta: f64) -> Result<Self> {
        let l = constants.l();
        if r > l {
            return Self::from_parts(constants, r, lambda, alpha, beta);
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("must be positive, got {r}"),
            });
        }
        // Validate λ, α, β through the full constructor at a valid r.
        let mut out = Self::from_parts(constants, 2.0 * l.max(f64::MIN_POSITIVE), lambda, alpha, beta)?;
        out.r = r;
        for v in [&mut out.zeta, &mut out.sigma1, &mut out.sigma2, &mut out.eta, &mut out.l_dr, &mut out.rho_conv] {
            *v = f64::NAN;
        }
        out.omega = out.omega.map(|_| f64::NAN);
        out.kappa = out.kappa.map(|_| f64::NAN);
        Ok(out)
    }

    /// Upper bound on `α` under which the sufficient decrease property holds.
    pub fn alpha_max(&self) -> f64 {
        (1.0 / (10.0 * self.l)).min(1.0 / (4.0 * self.l * self.zeta * self.zeta))
    }

    /// Upper bound on `β` from the sufficient decrease property (schedule excluded).
    pub fn beta_max(&self) -> f64 {
        let (r, l) = (self.r, self.l);
        (1.0_f64 / 28.0).min((r - l).powi(2) / (32.0 * self.alpha * r * (r + l).powi(2)))
    }

    /// Lists every way these parameters leave the ranges of the convergence theory.
    pub fn theory_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let tol = 1e-12;
        if !(self.r > self.l) {
            out.push(format!("r = {} <= L = {}; the analysis constants are undefined", self.r, self.l));
        } else if self.r < 3.0 * self.l * (1.0 - tol) {
            out.push(format!("r = {} < 3L = {}", self.r, 3.0 * self.l));
        }
        if self.lambda < self.l * (1.0 - tol) {
            out.push(format!("lambda = {} < L = {}", self.lambda, self.l));
        }
        if self.alpha > self.alpha_max() * (1.0 + tol) {
            out.push(format!("alpha = {} > {}", self.alpha, self.alpha_max()));
        }
        if self.beta > self.beta_max() * (1.0 + tol) {
            out.push(format!("beta = {} > {}", self.beta, self.beta_max()));
        }
        out
    }
}

/// Theory-driven parameter choice: `r = 3L`, `λ = L`, then `ζ`, `α`, `ω` and finally
/// `β` from the regime's schedule for horizon `K`.
pub fn derive_parameters(constants: &ProblemConstants, regime: Regime, horizon: usize) -> Result<DerivedConstants> {
    let l = constants.l();
    if !(l > 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            reason: "must be positive".into(),
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter {
            name: "horizon",
            reason: "must be at least 1".into(),
        });
    }
    let r = 3.0 * l;
    let lambda = l;
    let zeta = zeta_of(l, r, lambda);
    let alpha = (1.0 / (10.0 * l)).min(1.0 / (4.0 * l * zeta * zeta));
    // β enters none of the dependent constants, so assemble with a placeholder first.
    let mut params = DerivedConstants::from_parts(constants, r, lambda, alpha, 0.5)?;
    let k = horizon as f64;
    let schedule = match regime {
        Regime::General => k.powf(-0.5),
        Regime::Kl => {
            let kl = constants.kl.ok_or_else(|| Error::InvalidParameter {
                name: "regime",
                reason: "the KŁ regime needs theta and mu".into(),
            })?;
            if kl.theta > 0.5 {
                k.powf(-(2.0 * kl.theta - 1.0) / (2.0 * kl.theta))
            } else {
                if !constants.diam_y.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "diam_y",
                        reason: "the theta <= 1/2 schedule needs a bounded Y".into(),
                    });
                }
                let omega = params.omega.expect("kl present");
                constants.diam_y.powf((2.0 * kl.theta - 1.0) / kl.theta) / (448.0 * alpha * r * omega * omega)
            }
        }
    };
    params.beta = params.beta_max().min(schedule);
    Ok(params)
}

/// Outcome of sampling-based oracle validation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct OracleReport {
    /// Worst relative error of `c_jvp` against central differences of `c_eval`.
    pub jvp_fd_error: f64,
    /// Worst `|⟨Jv, u⟩ - ⟨v, Jᵀu⟩|` relative to the product magnitudes.
    pub adjoint_error: f64,
    /// Worst relative error of `grad_y` against central differences in `y`.
    pub grad_y_fd_error: f64,
    /// Largest convexity violation `h(tz+(1-t)z') - t h(z) - (1-t) h(z')`.
    pub h_convexity_violation: f64,
    /// Largest observed ratio `|h(z)-h(z')| / (L_h ‖z-z'‖)`.
    pub h_lipschitz_ratio: f64,
    /// Largest observed ratio `|c(x) - c(x̄) - J(x-x̄)| / (L_c/2 ‖x-x̄‖²)`.
    pub jacobian_lipschitz_ratio: f64,
    /// Largest violation of the two-sided model bound, scaled by `‖x-x̄‖²`.
    pub model_bound_violation: f64,
    pub samples: usize,
}

impl OracleReport {
    /// Whether the sampled evidence is consistent with the declared constants.
    pub fn constants_consistent(&self) -> bool {
        self.h_convexity_violation <= 1e-10
            && self.h_lipschitz_ratio <= 1.0 + 1e-9
            && self.jacobian_lipschitz_ratio <= 1.0 + 1e-6
            && self.model_bound_violation <= 1e-9
    }
}

/// Random point of a set; unbounded coordinates are drawn from `N(0, scale²)`.
pub fn sample_point<R: Rng + ?Sized>(set: &ConvexSet, rng: &mut R, scale: f64) -> Vec<f64> {
    use rand_distr::{Distribution, Exp1, StandardNormal};
    match set {
        ConvexSet::WholeSpace { dim } => (0..*dim)
            .map(|_| { let g: f64 = StandardNormal.sample(rng); scale * g })
            .collect::<Vec<f64>>(),
        ConvexSet::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| if u > l { rng.random_range(*l..=*u) } else { *l })
            .collect(),
        ConvexSet::Ball2 { center, radius } => {
            let g: Vec<f64> = center.iter().map(|_| StandardNormal.sample(rng)).collect();
            let n = linalg::norm(&g).max(1e-300);
            let rad = radius * rng.random::<f64>().powf(1.0 / center.len() as f64);
            center.iter().zip(&g).map(|(c, v)| c + rad * v / n).collect()
        }
        ConvexSet::Simplex { dim } => {
            let e: Vec<f64> = (0..*dim).map(|_| Exp1.sample(rng)).collect();
            let s: f64 = e.iter().sum();
            e.iter().map(|v| v / s).collect()
        }
    }
}

/// Samples the oracles of `p` and measures how well they agree with finite differences
/// and with the declared constants. `scale` bounds the sampling region for unbounded `X`.
pub fn validate_oracles<P, R>(p: &P, rng: &mut R, samples: usize, scale: f64) -> OracleReport
where
    P: CompositeMinimaxProblem + ?Sized,
    R: Rng + ?Sized,
{
    use rand_distr::{Distribution, StandardNormal};
    let consts = p.constants();
    let l = consts.l();
    let mut rep = OracleReport {
        samples,
        ..OracleReport::default()
    };
    let gauss = |rng: &mut R, n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(rng)).collect() };
    for _ in 0..samples {
        let x = sample_point(p.set_x(), rng, scale);
        let y = sample_point(p.set_y(), rng, 1.0);
        let v = gauss(rng, p.dim_x());
        let u = gauss(rng, p.dim_z());

        // JVP against central differences
        let h = 1e-6 * (1.0 + linalg::norm(&x)) / linalg::norm(&v).max(1e-300);
        let cp = p.c_eval(&linalg::add_scaled(&x, h, &v), &y);
        let cm = p.c_eval(&linalg::add_scaled(&x, -h, &v), &y);
        let fd = linalg::scale(&linalg::sub(&cp, &cm), 0.5 / h);
        let jv = p.c_jvp(&x, &y, &v);
        let err = linalg::dist(&fd, &jv) / linalg::norm(&jv).max(linalg::norm(&fd)).max(1e-8);
        rep.jvp_fd_error = rep.jvp_fd_error.max(err);

        // adjoint identity
        let jtu = p.c_vjp(&x, &y, &u);
        let lhs = linalg::dot(&jv, &u);
        let rhs = linalg::dot(&v, &jtu);
        let mag = (linalg::norm(&jv) * linalg::norm(&u)).max(linalg::norm(&v) * linalg::norm(&jtu)).max(1.0);
        rep.adjoint_error = rep.adjoint_error.max((lhs - rhs).abs() / mag);

        // grad_y against central differences, only along directions that stay in the
        // affine hull of Y (the simplex is not full dimensional)
        let gy = p.grad_y(&x, &y);
        let mut dir = gauss(rng, p.dim_y());
        if matches!(p.set_y(), ConvexSet::Simplex { .. }) {
            let mean = dir.iter().sum::<f64>() / dir.len() as f64;
            dir.iter_mut().for_each(|d| *d -= mean);
        }
        let nd = linalg::norm(&dir);
        if nd > 0.0 {
            dir.iter_mut().for_each(|d| *d /= nd);
            let hy = 1e-6;
            let fp = p.h_eval(&p.c_eval(&x, &linalg::add_scaled(&y, hy, &dir)), &linalg::add_scaled(&y, hy, &dir));
            let fm = p.h_eval(&p.c_eval(&x, &linalg::add_scaled(&y, -hy, &dir)), &linalg::add_scaled(&y, -hy, &dir));
            let fd = (fp - fm) / (2.0 * hy);
            let an = linalg::dot(&gy, &dir);
            let err = (fd - an).abs() / an.abs().max(fd.abs()).max(1e-3);
            rep.grad_y_fd_error = rep.grad_y_fd_error.max(err);
        }

        // convexity and Lipschitz continuity of h
        let z = p.c_eval(&x, &y);
        let z2 = linalg::add(&z, &gauss(rng, p.dim_z()));
        let t: f64 = rng.random();
        let mid: Vec<f64> = z.iter().zip(&z2).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        let (h1, h2) = (p.h_eval(&z, &y), p.h_eval(&z2, &y));
        let viol = p.h_eval(&mid, &y) - t * h1 - (1.0 - t) * h2;
        let scale_h = 1.0 + h1.abs().max(h2.abs());
        rep.h_convexity_violation = rep.h_convexity_violation.max(viol / scale_h);
        let dz = linalg::dist(&z, &z2);
        if dz > 0.0 {
            rep.h_lipschitz_ratio = rep.h_lipschitz_ratio.max((h1 - h2).abs() / (consts.l_h * dz));
        }

        // Jacobian Lipschitz modulus via the linearization error, and the model bound
        let xb = sample_point(p.set_x(), rng, scale);
        let d = linalg::sub(&x, &xb);
        let dd = linalg::norm_sq(&d);
        if dd > 1e-12 {
            let cb = p.c_eval(&xb, &y);
            let lin = linalg::add(&cb, &p.c_jvp(&xb, &y, &d));
            let lin_err = linalg::dist(&z, &lin);
            rep.jacobian_lipschitz_ratio = rep.jacobian_lipschitz_ratio.max(lin_err / (0.5 * consts.l_c * dd));
            // -L/2 ‖d‖² ≤ F(x,y) - h(lin) ≤ L/2 ‖d‖²
            let gap = p.h_eval(&z, &y) - p.h_eval(&lin, &y);
            let viol = (gap.abs() - 0.5 * l * dd) / dd;
            rep.model_bound_violation = rep.model_bound_violation.max(viol);
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn theory_parameters_for_unit_l() {
        let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap();
        let p = derive_parameters(&c, Regime::General, 10_000).unwrap();
        assert_abs_diff_eq!(p.r, 3.0);
        assert_abs_diff_eq!(p.lambda, 1.0);
        assert_abs_diff_eq!(p.zeta, 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.alpha, 1.0 / 144.0, epsilon = 1e-16);
        assert_abs_diff_eq!(p.sigma1, 1.5);
        assert_abs_diff_eq!(p.sigma2, 4.0);
        assert_abs_diff_eq!(p.l_dr, 5.0);
        // (r-L)^2 / (32 α r (r+L)^2) = 4 / (32 · 3 · 16 / 144) = 0.375 > K^{-1/2} = 0.01
        assert_abs_diff_eq!(p.beta, 0.01, epsilon = 1e-15);
        assert!(p.theory_violations().is_empty());
        assert!(p.omega.is_none());
        // κ = (1 + αLσ2 + αL) / (α(r-L)) · diam = (1 + 5/144) · 144 / 2 · 2
        assert_abs_diff_eq!(p.kappa.unwrap(), (1.0 + 5.0 / 144.0) * 144.0, epsilon = 1e-10);
        // η = αLζ = 6/144; ρ = max{(1+η)/α, r(ζ + σ2(η+1) + σ1)}
        let eta = 6.0 / 144.0;
        let rho = ((1.0 + eta) * 144.0_f64).max(3.0 * (6.0 + 4.0 * (eta + 1.0) + 1.5));
        assert_abs_diff_eq!(p.rho_conv, rho, epsilon = 1e-10);
    }

    #[test]
    fn kl_regime_requires_exponent() {
        let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap();
        assert!(matches!(
            derive_parameters(&c, Regime::Kl, 10),
            Err(Error::InvalidParameter { name: "regime", .. })
        ));
        let unbounded = ProblemConstants::new(1.0, 1.0, f64::INFINITY)
            .unwrap()
            .with_kl(0.5, 2.0)
            .unwrap();
        assert!(derive_parameters(&unbounded, Regime::Kl, 10).is_err());
    }

    #[test]
    fn kl_schedules() {
        let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap().with_kl(0.75, 1.0).unwrap();
        let p = derive_parameters(&c, Regime::Kl, 10_000).unwrap();
        // K^{-(2θ-1)/(2θ)} = 10^4^{-1/3}
        assert_abs_diff_eq!(p.beta, 1e4_f64.powf(-1.0 / 3.0).min(1.0 / 28.0), epsilon = 1e-15);

        let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap().with_kl(0.5, 2.0).unwrap();
        let p = derive_parameters(&c, Regime::Kl, 100).unwrap();
        let omega = 2f64.sqrt() / 2f64.sqrt() * (1.0 + p.alpha * 5.0) / (p.alpha * 2.0);
        assert_abs_diff_eq!(p.omega.unwrap(), omega, epsilon = 1e-9);
        assert_abs_diff_eq!(p.beta, 1.0 / (448.0 * p.alpha * 3.0 * omega * omega), epsilon = 1e-15);
    }

    #[test]
    fn constants_validation() {
        assert!(ProblemConstants::new(0.0, 1.0, 1.0).is_err());
        assert!(ProblemConstants::new(1.0, 1.0, 1.0).unwrap().with_kl(1.0, 1.0).is_err());
        let c = ProblemConstants::new(2.0, 3.0, 1.0).unwrap();
        assert_eq!(c.l(), 6.0);
        assert_eq!(c.with_l_override(4.0).unwrap().l(), 4.0);
    }

    #[test]
    fn overridden_parameters_report_violations() {
        let c = ProblemConstants::new(1.0, 1.0, 2.0).unwrap();
        let p = DerivedConstants::from_parts(&c, 1.5, 10.0, 0.1, 0.01).unwrap();
        let v = p.theory_violations();
        assert!(v.iter().any(|s| s.starts_with("r =")));
        assert!(v.iter().any(|s| s.starts_with("alpha =")));
        assert!(DerivedConstants::from_parts(&c, 0.5, 1.0, 0.1, 0.01).is_err());
    }
}

//! Linear regression with the quadratic loss `ℓ_i(θ) = ½(θᵀx_i - y_i)²`, whose input
//! gradient is `g_i(θ) = (θᵀx_i - y_i) θ`.

use super::{check_rho, NormKind, OuterLayout, RegressionDataset};
use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::problem::{CompositeMinimaxProblem, ProblemConstants};
use crate::sets::ConvexSet;
use crate::support::SupportSet;

#[derive(Debug, Clone)]
pub struct LinregWdro {
    data: RegressionDataset,
    layout: OuterLayout,
    trust_radius: f64,
    set_x: ConvexSet,
    set_y: ConvexSet,
    constants: ProblemConstants,
}

impl LinregWdro {
    /// Builds the problem with the default trust radius, ten times the norm of the
    /// least-squares solution (10 when that solution is zero).
    pub fn new(data: RegressionDataset, rho: f64, p: NormKind) -> Result<Self> {
        let ls = least_squares(&data);
        let r = 10.0 * linalg::norm(&ls);
        Self::with_trust_radius(data, rho, p, if r > 0.0 { r } else { 10.0 })
    }

    /// `L_c = √(Σ_i ‖x_i‖⁴ + 4‖x_i‖²)` holds globally. The Lipschitz modulus of
    /// `∇_w F = ρ(‖g_i‖_p)_i` in `θ` grows with `‖θ‖`; it is declared on `‖θ‖ ≤ R` as
    /// `ρ √(Σ_i k_p² (2R‖x_i‖ + |y_i|)²)`, and `L` is the larger of the two moduli.
    pub fn with_trust_radius(data: RegressionDataset, rho: f64, p: NormKind, trust_radius: f64) -> Result<Self> {
        check_rho(rho)?;
        if data.is_empty() {
            return Err(Error::InsufficientData("empty dataset".into()));
        }
        if !(trust_radius > 0.0 && trust_radius.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "trust_radius",
                reason: format!("must be positive and finite, got {trust_radius}"),
            });
        }
        let (n, d) = (data.len(), data.dim());
        let layout = OuterLayout { n, d, rho, p };
        let k = p.euclidean_lipschitz(d);
        let mut lc2 = 0.0;
        let mut lw2 = 0.0;
        for i in 0..n {
            let nx2 = linalg::norm_sq(data.features.row(i));
            lc2 += nx2 * nx2 + 4.0 * nx2;
            lw2 += (k * (2.0 * trust_radius * nx2.sqrt() + data.targets[i].abs())).powi(2);
        }
        let l_h = layout.l_h();
        let l_c = lc2.sqrt().max(f64::MIN_POSITIVE);
        let l_w = rho * lw2.sqrt();
        let set_y = ConvexSet::simplex(n)?;
        let mut constants = ProblemConstants::new(l_h, l_c, set_y.diameter())?;
        if l_w > l_h * l_c {
            constants = constants.with_l_override(l_w)?;
        }
        Ok(Self {
            data,
            layout,
            trust_radius,
            set_x: ConvexSet::whole_space(d),
            set_y,
            constants,
        })
    }

    pub fn data(&self) -> &RegressionDataset {
        &self.data
    }

    pub fn rho(&self) -> f64 {
        self.layout.rho
    }

    pub fn norm_kind(&self) -> NormKind {
        self.layout.p
    }

    pub fn trust_radius(&self) -> f64 {
        self.trust_radius
    }

    fn residuals(&self, theta: &[f64]) -> Vec<f64> {
        let pred = self.data.features.mul_vec(theta);
        pred.iter().zip(&self.data.targets).map(|(p, y)| p - y).collect()
    }

    /// `g(θ) = (1/N) Σ_i ℓ_i(θ) + ρ max_i ‖g_i(θ)‖_p`, evaluated directly.
    pub fn objective_g(&self, theta: &[f64]) -> f64 {
        let res = self.residuals(theta);
        let loss = res.iter().map(|r| 0.5 * r * r).sum::<f64>() / res.len() as f64;
        let reg = res
            .iter()
            .map(|r| self.layout.p.norm(&linalg::scale(theta, *r)))
            .fold(0.0, f64::max);
        loss + self.layout.rho * reg
    }
}

/// `argmin ‖Xθ - y‖²` through the (slightly regularized) normal equations.
pub(crate) fn least_squares(data: &RegressionDataset) -> Vec<f64> {
    let x = &data.features;
    let d = x.cols();
    let mut g = DenseMatrix::zeros(d, d);
    for i in 0..x.rows() {
        let row = x.row(i);
        for a in 0..d {
            for b in 0..d {
                g.set(a, b, g.get(a, b) + row[a] * row[b]);
            }
        }
    }
    let ridge = 1e-12 * (1.0 + (0..d).map(|a| g.get(a, a)).fold(0.0, f64::max));
    for a in 0..d {
        g.set(a, a, g.get(a, a) + ridge);
    }
    linalg::solve_spd(&g, &x.tr_mul_vec(&data.targets)).unwrap_or_else(|| vec![0.0; d])
}

impl CompositeMinimaxProblem for LinregWdro {
    fn name(&self) -> String {
        format!("linreg-wdro(N={}, d={}, rho={}, p={})", self.layout.n, self.layout.d, self.layout.rho, self.layout.p)
    }
    fn dim_x(&self) -> usize {
        self.layout.d
    }
    fn dim_y(&self) -> usize {
        self.layout.n
    }
    fn dim_z(&self) -> usize {
        self.layout.dim_z()
    }
    fn c_eval(&self, theta: &[f64], _w: &[f64]) -> Vec<f64> {
        let res = self.residuals(theta);
        let mut out: Vec<f64> = res.iter().map(|r| 0.5 * r * r).collect();
        out.reserve(self.layout.n * self.layout.d);
        for r in &res {
            out.extend(theta.iter().map(|t| r * t));
        }
        out
    }
    fn c_jvp(&self, theta: &[f64], _w: &[f64], v: &[f64]) -> Vec<f64> {
        let res = self.residuals(theta);
        let xv = self.data.features.mul_vec(v);
        let mut out: Vec<f64> = res.iter().zip(&xv).map(|(r, a)| r * a).collect();
        for (r, a) in res.iter().zip(&xv) {
            out.extend(theta.iter().zip(v).map(|(t, vj)| a * t + r * vj));
        }
        out
    }
    fn c_vjp(&self, theta: &[f64], _w: &[f64], u: &[f64]) -> Vec<f64> {
        let (n, d) = (self.layout.n, self.layout.d);
        let res = self.residuals(theta);
        let mut out = vec![0.0; d];
        for i in 0..n {
            let ug = &u[n + i * d..n + (i + 1) * d];
            let coef = u[i] * res[i] + linalg::dot(theta, ug);
            linalg::axpy(coef, self.data.features.row(i), &mut out);
            linalg::axpy(res[i], ug, &mut out);
        }
        out
    }
    fn jacobian(&self, theta: &[f64], _w: &[f64]) -> DenseMatrix {
        let (n, d) = (self.layout.n, self.layout.d);
        let res = self.residuals(theta);
        let mut jac = DenseMatrix::zeros(self.dim_z(), d);
        for i in 0..n {
            let xi = self.data.features.row(i);
            for j in 0..d {
                jac.set(i, j, res[i] * xi[j]);
            }
            for a in 0..d {
                let row = jac.row_mut(n + i * d + a);
                for (j, v) in row.iter_mut().enumerate() {
                    *v = theta[a] * xi[j] + if a == j { res[i] } else { 0.0 };
                }
            }
        }
        jac
    }
    fn h_eval(&self, z: &[f64], w: &[f64]) -> f64 {
        self.layout.h_eval(z, w)
    }
    fn h_subgrad(&self, z: &[f64], w: &[f64]) -> Vec<f64> {
        self.layout.h_subgrad(z, w)
    }
    fn grad_y(&self, theta: &[f64], w: &[f64]) -> Vec<f64> {
        self.layout.grad_w(&self.c_eval(theta, w))
    }
    fn set_x(&self) -> &ConvexSet {
        &self.set_x
    }
    fn set_y(&self) -> &ConvexSet {
        &self.set_y
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn max_oracle(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let z = self.c_eval(theta, &[]);
        Some(self.layout.max_over_simplex(&z))
    }
    fn h_support(&self, w: &[f64]) -> Option<SupportSet> {
        Some(self.layout.support(w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::evaluate_f;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_sample_hand_value() {
        let data = RegressionDataset::new(DenseMatrix::from_rows(&[vec![1.0]]), vec![1.0], "hand").unwrap();
        let p = LinregWdro::new(data, 1.0, NormKind::L2).unwrap();
        // ½(1 - 2)² + |2 - 1| · |2|
        assert_abs_diff_eq!(evaluate_f(&p, &[2.0], &[1.0]).unwrap(), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.objective_g(&[2.0]), 2.5, epsilon = 1e-15);
    }

    #[test]
    fn zero_parameter_gives_half_mean_square_target() {
        let data = super::super::synth_regression_data(9, 3, 1, super::super::TargetMode::Planted).unwrap();
        let expect = data.targets.iter().map(|y| y * y).sum::<f64>() / 18.0;
        let p = LinregWdro::new(data, 1.0, NormKind::Inf).unwrap();
        let w = vec![1.0 / 9.0; 9];
        assert_abs_diff_eq!(evaluate_f(&p, &[0.0; 3], &w).unwrap(), expect, epsilon = 1e-14);
        assert_abs_diff_eq!(p.objective_g(&[0.0; 3]), expect, epsilon = 1e-14);
    }

    #[test]
    fn dense_jacobian_matches_products() {
        let data = super::super::synth_regression_data(4, 3, 2, super::super::TargetMode::Planted).unwrap();
        let p = LinregWdro::new(data, 0.5, NormKind::L1).unwrap();
        let theta = [0.3, -1.2, 0.7];
        let v = [1.0, 2.0, -0.5];
        let jac = p.jacobian(&theta, &[]);
        let a = jac.mul_vec(&v);
        let b = p.c_jvp(&theta, &[], &v);
        assert!(linalg::dist(&a, &b) < 1e-13);
        let u: Vec<f64> = (0..p.dim_z()).map(|i| (i as f64).cos()).collect();
        assert!(linalg::dist(&jac.tr_mul_vec(&u), &p.c_vjp(&theta, &[], &u)) < 1e-12);
    }

    #[test]
    fn negative_rho_rejected() {
        let data = RegressionDataset::new(DenseMatrix::from_rows(&[vec![1.0]]), vec![1.0], "x").unwrap();
        assert!(LinregWdro::new(data, -1.0, NormKind::L2).is_err());
    }
}

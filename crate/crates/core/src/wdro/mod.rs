//! Variation-regularized Wasserstein DRO problems written as composite minimax problems
//!
//! ```text
//! min_θ max_{w∈Δ_N} (1/N) Σ_i ℓ_i(θ) + ρ Σ_i w_i ‖∇_x ℓ(y_i, f_θ(x_i))‖_p
//! ```
//!
//! with datasets, synthetic generators and a LIBSVM reader.

mod data;
mod linreg;
mod mlp;

pub use data::{
    load_libsvm, parse_libsvm, read_classification_csv, read_regression_csv, synth_regression_data, synth_ring_classification,
    write_classification_csv, write_regression_csv, ClassificationDataset, RegressionDataset, TargetMode,
};
pub use linreg::LinregWdro;
pub use mlp::{write_decision_boundary, MlpParams, MlpWdro, HIDDEN};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::CompositeMinimaxProblem;
use crate::support::SupportBlock;

/// The norm `‖·‖_p` of the regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L1,
    L2,
    Inf,
}

impl NormKind {
    pub const ALL: [NormKind; 3] = [NormKind::L1, NormKind::L2, NormKind::Inf];

    pub fn as_str(&self) -> &'static str {
        match self {
            NormKind::L1 => "1",
            NormKind::L2 => "2",
            NormKind::Inf => "inf",
        }
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            NormKind::L1 => linalg::norm1(v),
            NormKind::L2 => linalg::norm(v),
            NormKind::Inf => linalg::norm_inf(v),
        }
    }

    /// Lipschitz modulus of `‖·‖_p` on `R^d` with respect to the Euclidean norm.
    pub fn euclidean_lipschitz(&self, d: usize) -> f64 {
        match self {
            NormKind::L1 => (d as f64).sqrt(),
            NormKind::L2 | NormKind::Inf => 1.0,
        }
    }

    /// `R ‖·‖_p` as the support function of a dual-norm ball of radius `R`.
    pub(crate) fn support_block(&self, dim: usize, radius: f64) -> SupportBlock {
        match self {
            NormKind::L1 => SupportBlock::Box { dim, radius },
            NormKind::L2 => SupportBlock::Ball { dim, radius },
            NormKind::Inf => SupportBlock::CrossPolytope { dim, radius },
        }
    }
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(NormKind::L1),
            "2" | "l2" => Ok(NormKind::L2),
            "inf" | "linf" | "infinity" => Ok(NormKind::Inf),
            other => Err(Error::InvalidParameter {
                name: "p",
                reason: format!("expected 1, 2 or inf, got `{other}`"),
            }),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho >= 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "rho",
            reason: format!("must be nonnegative and finite, got {rho}"),
        })
    }
}

/// Layout shared by both builders: `c = (ℓ_1, …, ℓ_N, g_1, …, g_N)` with `g_i ∈ R^d`,
/// and `h_w(z) = (1/N) Σ z_i^loss + ρ Σ w_i ‖z_i^grad‖_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct OuterLayout {
    pub n: usize,
    pub d: usize,
    pub rho: f64,
    pub p: NormKind,
}

impl OuterLayout {
    pub fn dim_z(&self) -> usize {
        self.n * (1 + self.d)
    }

    pub fn grad_block<'a>(&self, z: &'a [f64], i: usize) -> &'a [f64] {
        let start = self.n + i * self.d;
        &z[start..start + self.d]
    }

    pub fn h_eval(&self, z: &[f64], w: &[f64]) -> f64 {
        let loss = z[..self.n].iter().sum::<f64>() / self.n as f64;
        let reg: f64 = (0..self.n).map(|i| w[i] * self.p.norm(self.grad_block(z, i))).sum();
        loss + self.rho * reg
    }

    pub fn h_subgrad(&self, z: &[f64], w: &[f64]) -> Vec<f64> {
        let s = self.support(w);
        s.subgradient(z)
    }

    pub fn support(&self, w: &[f64]) -> crate::support::SupportSet {
        let mut blocks = Vec::with_capacity(self.n + 1);
        blocks.push(SupportBlock::Point(vec![1.0 / self.n as f64; self.n]));
        for wi in w {
            blocks.push(self.p.support_block(self.d, self.rho * wi.max(0.0)));
        }
        crate::support::SupportSet::new(blocks)
    }

    /// `∇_w F = ρ (‖g_i‖_p)_i`.
    pub fn grad_w(&self, z: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.rho * self.p.norm(self.grad_block(z, i))).collect()
    }

    /// `L_h = √(1/N + ρ² k_p²)`, maximized over the simplex at a vertex.
    pub fn l_h(&self) -> f64 {
        let k = self.p.euclidean_lipschitz(self.d);
        (1.0 / self.n as f64 + self.rho * self.rho * k * k).sqrt()
    }

    /// `max_w F(θ, w)` at the lowest-index vertex of maximal regularizer.
    pub fn max_over_simplex(&self, z: &[f64]) -> (f64, Vec<f64>) {
        let g = self.grad_w(z);
        let mut best = 0;
        for (i, v) in g.iter().enumerate() {
            if *v > g[best] {
                best = i;
            }
        }
        let loss = z[..self.n].iter().sum::<f64>() / self.n as f64;
        (loss + g[best], linalg::basis(self.n, best))
    }
}

/// `max` over the `N` vertices of `Δ_N` of `F(θ, e_i)`, evaluated through the generic
/// oracles (a reference for the direct evaluations of the builders).
pub fn vertex_max<P: CompositeMinimaxProblem + ?Sized>(problem: &P, theta: &[f64]) -> Result<f64> {
    let n = problem.dim_y();
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        best = best.max(crate::problem::evaluate_f(problem, theta, &linalg::basis(n, i))?);
    }
    Ok(best)
}

/// Finite-difference and adjoint agreement of `c_jvp` and `c_vjp` at random points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientGate {
    pub samples: usize,
    /// Worst `‖FD(v) - J v‖ / ‖J v‖` with central differences.
    pub jvp_rel_error: f64,
    /// Worst `|⟨u, FD(v)⟩ - ⟨Jᵀu, v⟩|` relative to `‖u‖ ‖FD(v)‖`.
    pub vjp_rel_error: f64,
    /// Worst `|⟨J v, u⟩ - ⟨v, Jᵀu⟩|` relative to `‖J v‖ ‖u‖ + ‖v‖ ‖Jᵀu‖`.
    pub adjoint_error: f64,
}

impl GradientGate {
    pub fn passes(&self, fd_tol: f64, adjoint_tol: f64) -> bool {
        self.jvp_rel_error <= fd_tol && self.vjp_rel_error <= fd_tol && self.adjoint_error <= adjoint_tol
    }
}

/// Runs the gate at `samples` points `x ~ N(0, scale²)` (projected onto `X`).
pub fn gradient_gate<P, R>(problem: &P, rng: &mut R, samples: usize, scale: f64) -> GradientGate
where
    P: CompositeMinimaxProblem + ?Sized,
    R: rand::Rng + ?Sized,
{
    use crate::problem::sample_point;
    let whole_x = crate::sets::ConvexSet::whole_space(problem.dim_x());
    let whole_z = crate::sets::ConvexSet::whole_space(problem.dim_z());
    let mut gate = GradientGate {
        samples,
        jvp_rel_error: 0.0,
        vjp_rel_error: 0.0,
        adjoint_error: 0.0,
    };
    for _ in 0..samples {
        let x = problem.set_x().project_unchecked(&sample_point(&whole_x, rng, scale));
        let y = sample_point(problem.set_y(), rng, 1.0);
        let mut v = sample_point(&whole_x, rng, 1.0);
        let nv = linalg::norm(&v).max(1e-300);
        v.iter_mut().for_each(|a| *a /= nv);
        let u = sample_point(&whole_z, rng, 1.0);
        let h = 1e-6 * (1.0 + linalg::norm(&x));
        let plus = problem.c_eval(&linalg::add_scaled(&x, h, &v), &y);
        let minus = problem.c_eval(&linalg::add_scaled(&x, -h, &v), &y);
        let fd: Vec<f64> = plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let jv = problem.c_jvp(&x, &y, &v);
        let jtu = problem.c_vjp(&x, &y, &u);
        let tiny = 1e-300;
        gate.jvp_rel_error = gate
            .jvp_rel_error
            .max(linalg::dist(&fd, &jv) / linalg::norm(&jv).max(linalg::norm(&fd)).max(tiny));
        gate.vjp_rel_error = gate.vjp_rel_error.max(
            (linalg::dot(&u, &fd) - linalg::dot(&jtu, &v)).abs() / (linalg::norm(&u) * linalg::norm(&fd)).max(tiny),
        );
        let scale_adj = linalg::norm(&jv) * linalg::norm(&u) + linalg::norm(&v) * linalg::norm(&jtu);
        gate.adjoint_error = gate
            .adjoint_error
            .max((linalg::dot(&jv, &u) - linalg::dot(&v, &jtu)).abs() / scale_adj.max(tiny));
    }
    gate
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn norm_kind_parses_aliases() {
        assert_eq!("L1".parse::<NormKind>().unwrap(), NormKind::L1);
        assert_eq!("2".parse::<NormKind>().unwrap(), NormKind::L2);
        assert_eq!("infinity".parse::<NormKind>().unwrap(), NormKind::Inf);
        assert!("3".parse::<NormKind>().is_err());
    }

    #[test]
    fn direct_objective_matches_vertex_max() {
        let data = synth_regression_data(12, 3, 4, TargetMode::Planted).unwrap();
        for p in NormKind::ALL {
            let prob = LinregWdro::new(data.clone(), 0.7, p).unwrap();
            let theta = [0.4, -0.3, 1.1];
            let direct = prob.objective_g(&theta);
            assert!((direct - vertex_max(&prob, &theta).unwrap()).abs() < 1e-12 * (1.0 + direct));
            let (val, _) = prob.max_oracle(&theta).unwrap();
            assert!((direct - val).abs() < 1e-12 * (1.0 + direct));
        }
    }

    #[test]
    fn gates_pass_for_both_builders() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lin = LinregWdro::new(synth_regression_data(20, 4, 1, TargetMode::Planted).unwrap(), 1.0, NormKind::L2).unwrap();
        let g = gradient_gate(&lin, &mut rng, 5, 1.0);
        assert!(g.passes(1e-4, 1e-10), "{g:?}");
        let mlp = MlpWdro::new(synth_ring_classification(20, 1.2, 2).unwrap(), 1.0, NormKind::Inf).unwrap();
        let g = gradient_gate(&mlp, &mut rng, 5, 1.0);
        assert!(g.passes(1e-4, 1e-10), "{g:?}");
    }
}

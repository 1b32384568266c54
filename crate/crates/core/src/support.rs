//! Outer functions written as support functions of product sets.
//!
//! Every outer function `h_y` used in this crate has the form
//! `h_y(z) = Σ_b σ_{Q_b}(z_b)`, a sum of support functions over consecutive blocks of
//! `z`. This covers linear terms and (weighted) ℓ1, ℓ2 and ℓ∞ norms, and it gives the
//! prox-linear subproblem a smooth dual over `Q = Π_b Q_b`.

use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::sets::project_simplex;

/// One block of the dual set `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SupportBlock {
    /// `Q_b = {a}`: contributes the linear term `⟨a, z_b⟩`.
    Point(Vec<f64>),
    /// `Q_b = {‖q‖∞ ≤ R}`: contributes `R‖z_b‖₁`.
    Box { dim: usize, radius: f64 },
    /// `Q_b = {‖q‖₂ ≤ R}`: contributes `R‖z_b‖₂`.
    Ball { dim: usize, radius: f64 },
    /// `Q_b = {‖q‖₁ ≤ R}`: contributes `R‖z_b‖∞`.
    CrossPolytope { dim: usize, radius: f64 },
}

impl SupportBlock {
    pub fn dim(&self) -> usize {
        match self {
            SupportBlock::Point(a) => a.len(),
            SupportBlock::Box { dim, .. }
            | SupportBlock::Ball { dim, .. }
            | SupportBlock::CrossPolytope { dim, .. } => *dim,
        }
    }

    fn value(&self, z: &[f64]) -> f64 {
        match self {
            SupportBlock::Point(a) => linalg::dot(a, z),
            SupportBlock::Box { radius, .. } => radius * linalg::norm1(z),
            SupportBlock::Ball { radius, .. } => radius * linalg::norm(z),
            SupportBlock::CrossPolytope { radius, .. } => radius * linalg::norm_inf(z),
        }
    }

    /// Deterministic element of `argmax_{q ∈ Q_b} ⟨q, z⟩`.
    ///
    /// Ties: `‖·‖₁` uses `sign` with `0 ↦ 0`, `‖·‖∞` picks the lowest index of
    /// maximal magnitude, `‖·‖₂` returns `0` at the origin.
    fn subgrad(&self, z: &[f64], out: &mut [f64]) {
        match self {
            SupportBlock::Point(a) => out.copy_from_slice(a),
            SupportBlock::Box { radius, .. } => {
                for (o, v) in out.iter_mut().zip(z) {
                    *o = if *v > 0.0 {
                        *radius
                    } else if *v < 0.0 {
                        -radius
                    } else {
                        0.0
                    };
                }
            }
            SupportBlock::Ball { radius, .. } => {
                let n = linalg::norm(z);
                for (o, v) in out.iter_mut().zip(z) {
                    *o = if n > 0.0 { radius * v / n } else { 0.0 };
                }
            }
            SupportBlock::CrossPolytope { radius, .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
                let mut best = 0usize;
                let mut best_abs = f64::NEG_INFINITY;
                for (i, v) in z.iter().enumerate() {
                    if v.abs() > best_abs {
                        best_abs = v.abs();
                        best = i;
                    }
                }
                if best_abs > 0.0 {
                    out[best] = radius * z[best].signum();
                }
            }
        }
    }

    /// Euclidean projection onto the block.
    pub fn project(&self, q: &mut [f64]) {
        match self {
            SupportBlock::Point(a) => q.copy_from_slice(a),
            SupportBlock::Box { radius, .. } => {
                q.iter_mut().for_each(|v| *v = v.clamp(-radius, *radius));
            }
            SupportBlock::Ball { radius, .. } => {
                let n = linalg::norm(q);
                if n > *radius {
                    let s = radius / n;
                    q.iter_mut().for_each(|v| *v *= s);
                }
            }
            SupportBlock::CrossPolytope { radius, .. } => project_l1_ball(q, *radius),
        }
    }

    /// Projection of `q` onto the exposed face `argmax_{Q_b} ⟨·, z⟩`, treating
    /// coordinates with `|z_i| ≤ tol` as zero. Returns the support deficit
    /// `σ(z) - ⟨q, z⟩ ≥ 0`, evaluated term by term so that it is exactly zero when the
    /// face is identified without the tolerance.
    fn face_project(&self, z: &[f64], q: &mut [f64], tol: f64) -> f64 {
        match self {
            SupportBlock::Point(a) => {
                q.copy_from_slice(a);
                0.0
            }
            SupportBlock::Box { radius, .. } => {
                let mut deficit = 0.0;
                for (qi, zi) in q.iter_mut().zip(z) {
                    *qi = if *zi > tol {
                        *radius
                    } else if *zi < -tol {
                        -radius
                    } else {
                        let v = qi.clamp(-radius, *radius);
                        deficit += radius * zi.abs() - v * zi;
                        v
                    };
                }
                deficit
            }
            SupportBlock::Ball { radius, .. } => {
                let n = linalg::norm(z);
                if n > tol {
                    for (qi, zi) in q.iter_mut().zip(z) {
                        *qi = radius * zi / n;
                    }
                    0.0
                } else {
                    self.project(q);
                    (radius * n - linalg::dot(q, z)).max(0.0)
                }
            }
            SupportBlock::CrossPolytope { radius, .. } => {
                let zmax = linalg::norm_inf(z);
                if zmax <= tol {
                    self.project(q);
                    return (radius * zmax - linalg::dot(q, z)).max(0.0);
                }
                let active: Vec<usize> = (0..z.len()).filter(|&i| z[i].abs() >= zmax - tol).collect();
                let signed: Vec<f64> = active.iter().map(|&i| q[i] * z[i].signum()).collect();
                let w = project_simplex(&signed, *radius);
                q.iter_mut().for_each(|v| *v = 0.0);
                let mut deficit = 0.0;
                for (k, &i) in active.iter().enumerate() {
                    q[i] = w[k] * z[i].signum();
                    deficit += w[k] * (zmax - z[i].abs());
                }
                deficit
            }
        }
    }

    /// `σ(z) - ⟨q, z⟩` for `q ∈ Q_b`, as a sum of nonnegative terms.
    fn deficit(&self, z: &[f64], q: &[f64]) -> f64 {
        match self {
            SupportBlock::Point(_) => 0.0,
            SupportBlock::Box { radius, .. } => z.iter().zip(q).map(|(zi, qi)| (radius * zi.abs() - qi * zi).max(0.0)).sum(),
            SupportBlock::Ball { radius, .. } => (radius * linalg::norm(z) - linalg::dot(q, z)).max(0.0),
            SupportBlock::CrossPolytope { radius, .. } => {
                let zmax = linalg::norm_inf(z);
                let mut acc = (radius - linalg::norm1(q)).max(0.0) * zmax;
                for (zi, qi) in z.iter().zip(q) {
                    acc += qi.abs() * (zmax - zi.abs()) + (qi.abs() * zi.abs() - qi * zi).max(0.0);
                }
                acc
            }
        }
    }

    /// Largest Euclidean norm of an element of `Q_b`.
    fn max_norm(&self) -> f64 {
        match self {
            SupportBlock::Point(a) => linalg::norm(a),
            SupportBlock::Box { dim, radius } => radius * (*dim as f64).sqrt(),
            SupportBlock::Ball { radius, .. } | SupportBlock::CrossPolytope { radius, .. } => *radius,
        }
    }
}

/// Projection onto `{‖q‖₁ ≤ radius}`.
pub fn project_l1_ball(q: &mut [f64], radius: f64) {
    if linalg::norm1(q) <= radius {
        return;
    }
    let abs: Vec<f64> = q.iter().map(|v| v.abs()).collect();
    let w = project_simplex(&abs, radius);
    for (qi, wi) in q.iter_mut().zip(w) {
        *qi = wi * qi.signum();
    }
}

/// `Q = Π_b Q_b`, the dual set whose support function is `h_y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    blocks: Vec<SupportBlock>,
}

impl SupportSet {
    pub fn new(blocks: Vec<SupportBlock>) -> Self {
        Self { blocks }
    }

    pub fn blocks(&self) -> &[SupportBlock] {
        &self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(SupportBlock::dim).sum()
    }

    /// True when `h` is linear (every block is a single point).
    pub fn is_affine(&self) -> bool {
        self.blocks.iter().all(|b| matches!(b, SupportBlock::Point(_)))
    }

    fn for_each_block<F: FnMut(&SupportBlock, std::ops::Range<usize>)>(&self, mut f: F) {
        let mut start = 0;
        for b in &self.blocks {
            let end = start + b.dim();
            f(b, start..end);
            start = end;
        }
    }

    /// `σ_Q(z)`
    pub fn value(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim());
        let mut acc = 0.0;
        self.for_each_block(|b, r| acc += b.value(&z[r]));
        acc
    }

    pub fn subgradient(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; z.len()];
        self.for_each_block(|b, r| b.subgrad(&z[r.clone()], &mut out[r]));
        out
    }

    pub fn project(&self, q: &mut [f64]) {
        self.for_each_block(|b, r| b.project(&mut q[r]));
    }

    /// Moves `q` onto (a tolerance-enlarged version of) `argmax_{q ∈ Q} ⟨q, z⟩` and
    /// returns the deficit `σ_Q(z) - ⟨q, z⟩`, so that `q ∈ ∂_δ σ_Q(z)` with `δ` the result.
    pub fn face_project(&self, z: &[f64], q: &mut [f64], tol: f64) -> f64 {
        let mut deficit = 0.0;
        self.for_each_block(|b, r| deficit += b.face_project(&z[r.clone()], &mut q[r], tol));
        deficit
    }

    /// `σ_Q(z) - ⟨q, z⟩` for `q ∈ Q`, summed block by block without cancellation.
    pub fn deficit(&self, z: &[f64], q: &[f64]) -> f64 {
        let mut acc = 0.0;
        self.for_each_block(|b, r| acc += b.deficit(&z[r.clone()], &q[r]));
        acc
    }

    /// Lipschitz modulus of `σ_Q` with respect to the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.max_norm().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// An element of `Q` (used to warm start dual iterations).
    pub fn any_point(&self) -> Vec<f64> {
        let mut q = vec![0.0; self.dim()];
        self.project(&mut q);
        q
    }
}

//! Closed convex constraint sets with exact Euclidean projections and normal-cone
//! residuals.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Feasibility slack accepted by [`ConvexSet::normal_cone_distance`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Distance to a bound below which a constraint counts as active.
const ACTIVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    WholeSpace { dim: usize },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball2 { center: Vec<f64>, radius: f64 },
    Simplex { dim: usize },
}

impl ConvexSet {
    pub fn whole_space(dim: usize) -> Self {
        ConvexSet::WholeSpace { dim }
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("box bounds", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidParameter {
                name: "box",
                reason: "lower bound must not exceed upper bound".into(),
            });
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        ConvexSet::boxed(vec![lo; dim], vec![hi; dim]).expect("lo <= hi")
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter {
                name: "radius",
                reason: format!("must be positive, got {radius}"),
            });
        }
        Ok(ConvexSet::Ball2 { center, radius })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "simplex",
                reason: "dimension must be at least 1".into(),
            });
        }
        Ok(ConvexSet::Simplex { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::WholeSpace { dim } | ConvexSet::Simplex { dim } => *dim,
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball2 { center, .. } => center.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ConvexSet::WholeSpace { .. } => "whole space",
            ConvexSet::Box { .. } => "box",
            ConvexSet::Ball2 { .. } => "ball",
            ConvexSet::Simplex { .. } => "simplex",
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ConvexSet::WholeSpace { .. })
    }

    /// Euclidean projection of `p` onto the set.
    pub fn project(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_dim("projection", self.dim(), p.len())?;
        Ok(self.project_unchecked(p))
    }

    pub(crate) fn project_unchecked(&self, p: &[f64]) -> Vec<f64> {
        match self {
            ConvexSet::WholeSpace { .. } => p.to_vec(),
            ConvexSet::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
            ConvexSet::Ball2 { center, radius } => {
                let d = linalg::dist(p, center);
                if d <= *radius {
                    p.to_vec()
                } else {
                    let s = radius / d;
                    center
                        .iter()
                        .zip(p)
                        .map(|(c, v)| c + s * (v - c))
                        .collect()
                }
            }
            ConvexSet::Simplex { .. } => project_simplex(p, 1.0),
        }
    }

    /// Amount by which `p` violates the set's constraints (zero when feasible).
    pub fn violation(&self, p: &[f64]) -> f64 {
        match self {
            ConvexSet::WholeSpace { .. } => 0.0,
            ConvexSet::Box { lower, upper } => p
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
                .fold(0.0, f64::max),
            ConvexSet::Ball2 { center, radius } => (linalg::dist(p, center) - radius).max(0.0),
            ConvexSet::Simplex { .. } => {
                let neg = p.iter().fold(0.0_f64, |m, v| m.max(-v));
                let sum: f64 = p.iter().sum();
                neg.max((sum - 1.0).abs())
            }
        }
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.len() == self.dim() && self.violation(p) <= tol
    }

    /// `dist(0, -v + N(point))`, the distance from `v` to the normal cone at `point`.
    ///
    /// For `v = ∇_y F` this is the dual game-stationarity residual.
    pub fn normal_cone_distance(&self, point: &[f64], v: &[f64]) -> Result<f64> {
        check_dim("normal cone point", self.dim(), point.len())?;
        check_dim("normal cone vector", self.dim(), v.len())?;
        let violation = self.violation(point);
        if violation > FEASIBILITY_TOL {
            return Err(Error::Infeasible {
                set: self.name(),
                violation,
            });
        }
        Ok(match self {
            ConvexSet::WholeSpace { .. } => linalg::norm(v),
            ConvexSet::Box { lower, upper } => {
                let mut acc = 0.0;
                for ((&x, &g), (&l, &u)) in point.iter().zip(v).zip(lower.iter().zip(upper)) {
                    let at_lo = x - l <= ACTIVE_TOL * (1.0 + l.abs());
                    let at_hi = u - x <= ACTIVE_TOL * (1.0 + u.abs());
                    // N at an upper bound is [0, inf), at a lower bound (-inf, 0].
                    let r = match (at_lo, at_hi) {
                        (true, true) => 0.0,
                        (false, true) => g.min(0.0),
                        (true, false) => g.max(0.0),
                        (false, false) => g,
                    };
                    acc += r * r;
                }
                acc.sqrt()
            }
            ConvexSet::Ball2 { center, radius } => {
                let offset = linalg::sub(point, center);
                let d = linalg::norm(&offset);
                if d < radius * (1.0 - ACTIVE_TOL) {
                    linalg::norm(v)
                } else {
                    let u = linalg::scale(&offset, 1.0 / d);
                    let radial = linalg::dot(v, &u).max(0.0);
                    linalg::norm(&linalg::add_scaled(v, -radial, &u))
                }
            }
            ConvexSet::Simplex { .. } => simplex_normal_cone_distance(point, v),
        })
    }

    /// Euclidean diameter; `f64::INFINITY` for unbounded sets.
    pub fn diameter(&self) -> f64 {
        match self {
            ConvexSet::WholeSpace { .. } => f64::INFINITY,
            ConvexSet::Box { lower, upper } => linalg::dist(upper, lower),
            ConvexSet::Ball2 { radius, .. } => 2.0 * radius,
            ConvexSet::Simplex { dim } => {
                if *dim == 1 {
                    0.0
                } else {
                    std::f64::consts::SQRT_2
                }
            }
        }
    }
}

/// Projection onto `{w : w >= 0, sum w = mass}` by sorting and thresholding.
pub fn project_simplex(p: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - mass) / (i as f64 + 1.0);
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    p.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Exact distance from `v` to the normal cone of the unit simplex at `w`.
///
/// `N(w) = {s·1 - m : m >= 0, m_i = 0 on supp(w)}`; for fixed `s` the best `m` is
/// explicit, leaving a one-dimensional convex piecewise quadratic in `s` whose
/// minimizer is found by sweeping the sorted off-support entries.
fn simplex_normal_cone_distance(w: &[f64], v: &[f64]) -> f64 {
    let support_tol = 1e-14;
    let mut on: Vec<f64> = Vec::new();
    let mut off: Vec<f64> = Vec::new();
    for (&wi, &vi) in w.iter().zip(v) {
        if wi > support_tol {
            on.push(vi);
        } else {
            off.push(vi);
        }
    }
    if on.is_empty() {
        // Only reachable for points at the feasibility tolerance; treat all as support.
        on = v.to_vec();
        off.clear();
    }
    off.sort_by(|a, b| b.total_cmp(a));
    let mut count = on.len() as f64;
    let mut sum: f64 = on.iter().sum();
    let mut s = sum / count;
    for &vi in &off {
        if vi > s {
            count += 1.0;
            sum += vi;
            s = sum / count;
        } else {
            break;
        }
    }
    let on_part: f64 = on.iter().map(|vi| (vi - s) * (vi - s)).sum();
    let off_part: f64 = off.iter().map(|vi| (vi - s).max(0.0).powi(2)).sum();
    (on_part + off_part).sqrt()
}

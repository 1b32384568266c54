//! Brute-force stationary sets of the planar toys on a grid.

use serde::{Deserialize, Serialize};

use super::instances::{RefElement, ToyId, ToyProblem2D};
use crate::problem::CompositeMinimaxProblem;

/// A connected group of flagged grid points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryCluster {
    /// Flagged point with the smallest sum of residual components.
    pub representative: (f64, f64),
    pub residual: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySets {
    pub toy: ToyId,
    pub grid_step: f64,
    pub tol: f64,
    /// `r` of the proximal residual behind the OS test.
    pub r: f64,
    /// Interval `X` was cut to when it is unbounded.
    pub truncated_x: Option<(f64, f64)>,
    pub mp: Vec<StationaryCluster>,
    pub gs: Vec<StationaryCluster>,
    pub os: Vec<StationaryCluster>,
}

/// Half-width used when `X` is unbounded.
pub const TRUNCATION: f64 = 2.0;

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    (0..=n).map(|i| if i == n { hi } else { lo + i as f64 * h }).collect()
}

/// One-sided derivatives `(f'(u-), f'(u+))` of the toy's max function.
fn max_derivatives(id: ToyId, u: f64) -> (f64, f64) {
    match id {
        ToyId::CubicQuadratic => {
            let d = 3.0 * u * u + 2.0 * u;
            (d, d)
        }
        ToyId::SineBilinear => {
            let c = u.cos();
            if u > 0.0 {
                (c, c)
            } else if u < 0.0 {
                (-c, -c)
            } else {
                (-1.0, 1.0)
            }
        }
        ToyId::Bilinear => {
            if u > 0.0 {
                (1.0, 1.0)
            } else if u < 0.0 {
                (-1.0, -1.0)
            } else {
                (-1.0, 1.0)
            }
        }
    }
}

/// `argmin_{u ∈ [lo, hi]} f(u) + r/2 (u - x)²` by bisection on the (monotone)
/// one-sided derivatives.
pub fn toy_prox(toy: &ToyProblem2D, x: f64, r: f64, lo: f64, hi: f64) -> f64 {
    let dphi = |u: f64| {
        let (l, rr) = max_derivatives(toy.id, u);
        (l + r * (u - x), rr + r * (u - x))
    };
    if dphi(lo).1 >= 0.0 {
        return lo;
    }
    if dphi(hi).0 <= 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let (dl, dr) = dphi(m);
        if dr < 0.0 {
            a = m;
        } else if dl > 0.0 {
            b = m;
        } else {
            return m;
        }
    }
    0.5 * (a + b)
}

/// `residual` flags points, `score` picks the representative (ties to the lowest index).
fn clusters(xs: &[f64], ys: &[f64], residual: &[f64], score: &[f64], tol: f64) -> Vec<StationaryCluster> {
    let (nx, ny) = (xs.len(), ys.len());
    let idx = |i: usize, j: usize| i * ny + j;
    let mut seen = vec![false; nx * ny];
    let mut out = Vec::new();
    for i0 in 0..nx {
        for j0 in 0..ny {
            if seen[idx(i0, j0)] || !(residual[idx(i0, j0)] <= tol) {
                continue;
            }
            seen[idx(i0, j0)] = true;
            let mut stack = vec![(i0, j0)];
            let mut rep = (i0, j0);
            let mut best = score[idx(i0, j0)];
            let mut c = StationaryCluster {
                representative: (xs[i0], ys[j0]),
                residual: residual[idx(i0, j0)],
                x_range: (xs[i0], xs[i0]),
                y_range: (ys[j0], ys[j0]),
                size: 0,
            };
            while let Some((i, j)) = stack.pop() {
                c.size += 1;
                let sc = score[idx(i, j)];
                let (x, y) = (xs[i], ys[j]);
                if sc < best || (sc == best && (i, j) < rep) {
                    rep = (i, j);
                    best = sc;
                    c.residual = residual[idx(i, j)];
                    c.representative = (x, y);
                }
                c.x_range = (c.x_range.0.min(x), c.x_range.1.max(x));
                c.y_range = (c.y_range.0.min(y), c.y_range.1.max(y));
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                            continue;
                        }
                        let k = idx(a as usize, b as usize);
                        if !seen[k] && residual[k] <= tol {
                            seen[k] = true;
                            stack.push((a as usize, b as usize));
                        }
                    }
                }
            }
            out.push(c);
        }
    }
    out
}

/// Flags grid points whose residual is at most `tol` and clusters them.
///
/// - GS: `max(dist(0, ∂_x F + N_X), dist(0, -∂_y F + N_Y))`, with the exact normal cones
///   of the untruncated sets.
/// - OS: `max(r |prox_{f/r + ι_X}(x) - x|, f(x) - F(x, y))` with `r = 3L`.
/// - MP: `max(f(x) - min f, f(x) - F(x, y))`, the minimum taken over the grid.
///
/// For the bilinear toy `X = R` is cut to `[-2, 2]` for the grid.
pub fn enumerate_stationary_sets(toy: &ToyProblem2D, grid_step: f64, tol: f64) -> StationarySets {
    let (lo, hi) = toy.x_bounds();
    let truncated = !(lo.is_finite() && hi.is_finite());
    let (lo, hi) = if truncated { (-TRUNCATION, TRUNCATION) } else { (lo, hi) };
    let xs = grid(lo, hi, grid_step);
    let ys = grid(-1.0, 1.0, grid_step);
    let r = 3.0 * toy.constants().l();
    let ny = ys.len();

    let fx: Vec<f64> = xs.iter().map(|&x| toy.max_value(x).0).collect();
    let f_min = fx.iter().copied().fold(f64::INFINITY, f64::min);
    let os_x: Vec<f64> = xs.iter().map(|&x| r * (toy_prox(toy, x, r, lo, hi) - x).abs()).collect();

    // (max, sum) of the residual components
    let residuals = |kind: u8| -> (Vec<f64>, Vec<f64>) {
        let mut out = Vec::with_capacity(xs.len() * ny);
        let mut score = Vec::with_capacity(xs.len() * ny);
        for (i, &x) in xs.iter().enumerate() {
            for &y in &ys {
                let attain = (fx[i] - toy.value(x, y)).max(0.0);
                let (a, b) = match kind {
                    0 => (fx[i] - f_min, attain),
                    1 => {
                        let (gx, gy) = toy.gradient(x, y);
                        let px = toy.set_x().normal_cone_distance(&[x], &[-gx]).unwrap_or(f64::INFINITY);
                        let py = toy.set_y().normal_cone_distance(&[y], &[gy]).unwrap_or(f64::INFINITY);
                        (px, py)
                    }
                    _ => (os_x[i], attain),
                };
                out.push(a.max(b));
                score.push(a + b);
            }
        }
        (out, score)
    };
    let sets = |kind: u8| {
        let (res, score) = residuals(kind);
        clusters(&xs, &ys, &res, &score, tol)
    };
    StationarySets {
        toy: toy.id,
        grid_step,
        tol,
        r,
        truncated_x: truncated.then_some((lo, hi)),
        mp: sets(0),
        gs: sets(1),
        os: sets(2),
    }
}

fn matches(c: &StationaryCluster, e: &RefElement, radius: f64) -> bool {
    match *e {
        RefElement::Point { x, y } => {
            let (a, b) = c.representative;
            ((a - x).powi(2) + (b - y).powi(2)).sqrt() <= radius
        }
        RefElement::Segment { x, y_lo, y_hi } => {
            (c.representative.0 - x).abs() <= radius && c.y_range.0 <= y_lo + radius && c.y_range.1 >= y_hi - radius
        }
    }
}

/// True when clusters and reference elements match one to one, each cluster within
/// `radius` of its element (segments must also be covered up to `radius`).
pub fn matches_reference(found: &[StationaryCluster], reference: &[RefElement], radius: f64) -> bool {
    if found.len() != reference.len() {
        return false;
    }
    let mut used = vec![false; found.len()];
    reference.iter().all(|e| {
        match found.iter().enumerate().position(|(i, c)| !used[i] && matches(c, e, radius)) {
            Some(i) => {
                used[i] = true;
                true
            }
            None => false,
        }
    })
}

impl StationarySets {
    /// Per-set agreement with the toy's reference sets at radius `2 · grid_step`.
    pub fn agreement(&self) -> (bool, bool, bool) {
        let refs = ToyProblem2D::new(self.toy).reference_sets();
        let rad = 2.0 * self.grid_step;
        (
            matches_reference(&self.mp, &refs.mp, rad),
            matches_reference(&self.gs, &refs.gs, rad),
            matches_reference(&self.os, &refs.os, rad),
        )
    }
}

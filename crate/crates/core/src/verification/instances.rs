//! Closed-form test instances: the three planar toys and a family with a strongly
//! concave dual (KŁ exponent 1/2).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::problem::{CompositeMinimaxProblem, ProblemConstants};
use crate::sets::ConvexSet;
use crate::support::{SupportBlock, SupportSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyId {
    /// `x³ - 2xy - y²` on `[-1, 1]²`
    CubicQuadratic,
    /// `sin(x) y` on `[-π/2, π/2] × [-1, 1]`
    SineBilinear,
    /// `xy` on `R × [-1, 1]`
    Bilinear,
}

impl ToyId {
    pub const ALL: [ToyId; 3] = [ToyId::CubicQuadratic, ToyId::SineBilinear, ToyId::Bilinear];

    pub fn as_str(&self) -> &'static str {
        match self {
            ToyId::CubicQuadratic => "cubic_quadratic",
            ToyId::SineBilinear => "sine_bilinear",
            ToyId::Bilinear => "bilinear",
        }
    }
}

impl std::str::FromStr for ToyId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cubic_quadratic" | "a" => Ok(ToyId::CubicQuadratic),
            "sine_bilinear" | "b" => Ok(ToyId::SineBilinear),
            "bilinear" | "c" => Ok(ToyId::Bilinear),
            other => Err(Error::InvalidParameter {
                name: "toy",
                reason: format!("unknown toy `{other}` (expected cubic_quadratic, sine_bilinear or bilinear)"),
            }),
        }
    }
}

/// Reference element of a stationary set: a point, or a vertical segment `{x} × [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RefElement {
    Point { x: f64, y: f64 },
    Segment { x: f64, y_lo: f64, y_hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSets {
    pub mp: Vec<RefElement>,
    pub gs: Vec<RefElement>,
    pub os: Vec<RefElement>,
}

/// A planar toy `F(x, y)` written as `h = id`, `c = F`.
#[derive(Debug, Clone)]
pub struct ToyProblem2D {
    pub id: ToyId,
    set_x: ConvexSet,
    set_y: ConvexSet,
    constants: ProblemConstants,
}

impl ToyProblem2D {
    pub fn new(id: ToyId) -> Self {
        let set_y = ConvexSet::cube(1, -1.0, 1.0);
        let (set_x, l_c) = match id {
            // |∂²F/∂x²| = |6x| ≤ 6
            ToyId::CubicQuadratic => (ConvexSet::cube(1, -1.0, 1.0), 6.0),
            ToyId::SineBilinear => (ConvexSet::cube(1, -FRAC_PI_2, FRAC_PI_2), 1.0),
            // c is linear in x; 1 is declared so that L also bounds the Lipschitz
            // modulus of ∇_y F = x
            ToyId::Bilinear => (ConvexSet::whole_space(1), 1.0),
        };
        Self {
            id,
            set_x,
            set_y,
            constants: ProblemConstants::new(1.0, l_c, 2.0).expect("valid toy constants"),
        }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self.id {
            ToyId::CubicQuadratic => x * x * x - 2.0 * x * y - y * y,
            ToyId::SineBilinear => x.sin() * y,
            ToyId::Bilinear => x * y,
        }
    }

    /// `(∂F/∂x, ∂F/∂y)`
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        match self.id {
            ToyId::CubicQuadratic => (3.0 * x * x - 2.0 * y, -2.0 * x - 2.0 * y),
            ToyId::SineBilinear => (x.cos() * y, x.sin()),
            ToyId::Bilinear => (y, x),
        }
    }

    /// `f(x) = max_y F(x, y)` in closed form with a maximizer.
    pub fn max_value(&self, x: f64) -> (f64, f64) {
        match self.id {
            ToyId::CubicQuadratic => {
                let y = (-x).clamp(-1.0, 1.0);
                (self.value(x, y), y)
            }
            ToyId::SineBilinear => {
                let y = if x.sin() >= 0.0 { 1.0 } else { -1.0 };
                (x.sin().abs(), y)
            }
            ToyId::Bilinear => {
                let y = if x >= 0.0 { 1.0 } else { -1.0 };
                (x.abs(), y)
            }
        }
    }

    /// Lower and upper ends of `X` (infinite for the bilinear toy).
    pub fn x_bounds(&self) -> (f64, f64) {
        match &self.set_x {
            ConvexSet::Box { lower, upper } => (lower[0], upper[0]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn reference_sets(&self) -> ReferenceSets {
        use RefElement::{Point, Segment};
        match self.id {
            ToyId::CubicQuadratic => {
                let gs = vec![
                    Point { x: -1.0, y: 1.0 },
                    Point {
                        x: -2.0 / 3.0,
                        y: 2.0 / 3.0,
                    },
                    Point { x: 0.0, y: 0.0 },
                ];
                ReferenceSets {
                    mp: vec![Point { x: -1.0, y: 1.0 }, Point { x: 0.0, y: 0.0 }],
                    os: gs.clone(),
                    gs,
                }
            }
            ToyId::SineBilinear => ReferenceSets {
                mp: vec![Segment {
                    x: 0.0,
                    y_lo: -1.0,
                    y_hi: 1.0,
                }],
                gs: vec![
                    Point { x: -FRAC_PI_2, y: -1.0 },
                    Point { x: 0.0, y: 0.0 },
                    Point { x: FRAC_PI_2, y: 1.0 },
                ],
                os: vec![
                    Point { x: -FRAC_PI_2, y: -1.0 },
                    Segment {
                        x: 0.0,
                        y_lo: -1.0,
                        y_hi: 1.0,
                    },
                    Point { x: FRAC_PI_2, y: 1.0 },
                ],
            },
            ToyId::Bilinear => {
                let seg = Segment {
                    x: 0.0,
                    y_lo: -1.0,
                    y_hi: 1.0,
                };
                ReferenceSets {
                    mp: vec![seg],
                    gs: vec![Point { x: 0.0, y: 0.0 }],
                    os: vec![seg],
                }
            }
        }
    }
}

impl CompositeMinimaxProblem for ToyProblem2D {
    fn name(&self) -> String {
        format!("toy:{}", self.id.as_str())
    }
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_y(&self) -> usize {
        1
    }
    fn dim_z(&self) -> usize {
        1
    }
    fn c_eval(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![self.value(x[0], y[0])]
    }
    fn c_jvp(&self, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
        vec![self.gradient(x[0], y[0]).0 * v[0]]
    }
    fn c_vjp(&self, x: &[f64], y: &[f64], u: &[f64]) -> Vec<f64> {
        vec![self.gradient(x[0], y[0]).0 * u[0]]
    }
    fn h_eval(&self, z: &[f64], _y: &[f64]) -> f64 {
        z[0]
    }
    fn h_subgrad(&self, _z: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        vec![self.gradient(x[0], y[0]).1]
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
    fn max_oracle(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (v, y) = self.max_value(x[0]);
        Some((v, vec![y]))
    }
    fn h_support(&self, _y: &[f64]) -> Option<SupportSet> {
        Some(SupportSet::new(vec![SupportBlock::Point(vec![1.0])]))
    }
}

/// `F(x, y) = s Σ_j |x_j² - 1| + xᵀA y - ‖y‖²`.
///
/// The dual is 2-strongly concave, so the KŁ property holds with `θ = 1/2` and
/// `μ = √(2·2) = 2`. Composite form: `c = (x_1² - 1, …, x_n² - 1, xᵀAy - ‖y‖²)` and
/// `h(z) = s Σ_{j≤n} |z_j| + z_{n+1}`, giving `L_h = √(n s² + 1)` and `L_c = 2`
/// (`L_c = 0` rows are dropped when `s = 0`).
#[derive(Debug, Clone)]
pub struct KlInstance {
    a: DenseMatrix,
    sharpness: f64,
    set_x: ConvexSet,
    set_y: ConvexSet,
    constants: ProblemConstants,
    label: String,
}

impl KlInstance {
    /// General constructor; `a` is `n × d`. The declared `L_c` is raised when needed so
    /// that `L = L_h L_c` bounds the joint Lipschitz modulus `‖(Aᵀ, -2I)‖` of `∇_y F`.
    pub fn new(a: DenseMatrix, sharpness: f64, set_x: ConvexSet, set_y: ConvexSet, label: &str) -> Result<Self> {
        if !(sharpness >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "sharpness",
                reason: format!("must be nonnegative, got {sharpness}"),
            });
        }
        crate::error::check_dim("KŁ instance X", a.rows(), set_x.dim())?;
        crate::error::check_dim("KŁ instance Y", a.cols(), set_y.dim())?;
        if !set_y.is_bounded() {
            return Err(Error::InvalidParameter {
                name: "set_y",
                reason: "Y must be bounded".into(),
            });
        }
        let n = a.rows() as f64;
        let l_h = (n * sharpness * sharpness + 1.0).sqrt();
        let grad_y_lip = (a.spectral_norm_estimate().powi(2) + 4.0).sqrt();
        let l_c = if sharpness > 0.0 { 2.0_f64.max(grad_y_lip / l_h) } else { grad_y_lip };
        let constants = ProblemConstants::new(l_h, l_c, set_y.diameter())?.with_kl(0.5, 2.0)?;
        Ok(Self {
            a,
            sharpness,
            set_x,
            set_y,
            constants,
            label: label.to_string(),
        })
    }

    /// Two sharp valleys per coordinate in the plane, unit-ball `Y`, `‖A‖ ≤ 1/2`.
    pub fn planar() -> Self {
        let a = DenseMatrix::from_rows(&[vec![0.3, 0.1], vec![-0.1, 0.2]]);
        Self::new(
            a,
            1.0,
            ConvexSet::cube(2, -2.0, 2.0),
            ConvexSet::ball(vec![0.0, 0.0], 1.0).expect("radius"),
            "kl:planar",
        )
        .expect("valid preset")
    }

    /// `F(x, y) = xy - y²` on `[-1, 1]²`.
    pub fn scalar() -> Self {
        Self::new(
            DenseMatrix::from_rows(&[vec![1.0]]),
            0.0,
            ConvexSet::cube(1, -1.0, 1.0),
            ConvexSet::cube(1, -1.0, 1.0),
            "kl:scalar",
        )
        .expect("valid preset")
    }

    fn sharp_rows(&self) -> usize {
        if self.sharpness > 0.0 {
            self.a.rows()
        } else {
            0
        }
    }

    /// `argmax_{y∈Y} F(x, y) = proj_Y(Aᵀx / 2)` (the concave part is isotropic).
    pub fn best_response(&self, x: &[f64]) -> Vec<f64> {
        self.set_y.project_unchecked(&linalg::scale(&self.a.tr_mul_vec(x), 0.5))
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let sharp: f64 = x.iter().map(|v| (v * v - 1.0).abs()).sum();
        self.sharpness * sharp + linalg::dot(x, &self.a.mul_vec(y)) - linalg::norm_sq(y)
    }
}

impl CompositeMinimaxProblem for KlInstance {
    fn name(&self) -> String {
        self.label.clone()
    }
    fn dim_x(&self) -> usize {
        self.a.rows()
    }
    fn dim_y(&self) -> usize {
        self.a.cols()
    }
    fn dim_z(&self) -> usize {
        self.sharp_rows() + 1
    }
    fn c_eval(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = x.iter().take(self.sharp_rows()).map(|v| v * v - 1.0).collect();
        out.push(linalg::dot(x, &self.a.mul_vec(y)) - linalg::norm_sq(y));
        out
    }
    fn c_jvp(&self, x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.sharp_rows()).map(|j| 2.0 * x[j] * v[j]).collect();
        out.push(linalg::dot(v, &self.a.mul_vec(y)));
        out
    }
    fn c_vjp(&self, x: &[f64], y: &[f64], u: &[f64]) -> Vec<f64> {
        let k = self.sharp_rows();
        let mut out = linalg::scale(&self.a.mul_vec(y), u[k]);
        for j in 0..k {
            out[j] += 2.0 * x[j] * u[j];
        }
        out
    }
    fn h_eval(&self, z: &[f64], _y: &[f64]) -> f64 {
        let k = self.sharp_rows();
        self.sharpness * linalg::norm1(&z[..k]) + z[k]
    }
    fn h_subgrad(&self, z: &[f64], _y: &[f64]) -> Vec<f64> {
        let k = self.sharp_rows();
        let mut out: Vec<f64> = z[..k]
            .iter()
            .map(|v| {
                if *v > 0.0 {
                    self.sharpness
                } else if *v < 0.0 {
                    -self.sharpness
                } else {
                    0.0
                }
            })
            .collect();
        out.push(1.0);
        out
    }
    fn grad_y(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut g = self.a.tr_mul_vec(x);
        linalg::axpy(-2.0, y, &mut g);
        g
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
    fn max_oracle(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let y = self.best_response(x);
        Some((self.value(x, &y), y))
    }
    fn h_support(&self, _y: &[f64]) -> Option<SupportSet> {
        let k = self.sharp_rows();
        let mut blocks = Vec::new();
        if k > 0 {
            blocks.push(SupportBlock::Box {
                dim: k,
                radius: self.sharpness,
            });
        }
        blocks.push(SupportBlock::Point(vec![1.0]));
        Some(SupportSet::new(blocks))
    }
}

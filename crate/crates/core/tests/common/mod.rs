//! Small hand-checkable problems shared by the integration tests.
#![allow(dead_code)]

use splda::{CompositeMinimaxProblem, ConvexSet, ProblemConstants, SupportBlock, SupportSet};

/// `F(x, y) = x` with `h(z) = z`, `c(x) = x` on `X = R`, `Y = [-1, 1]`.
pub struct ScalarLinear {
    set_x: ConvexSet,
    set_y: ConvexSet,
    constants: ProblemConstants,
}

impl ScalarLinear {
    pub fn new() -> Self {
        Self {
            set_x: ConvexSet::whole_space(1),
            set_y: ConvexSet::cube(1, -1.0, 1.0),
            constants: ProblemConstants::new(1.0, 1.0, 2.0).unwrap(),
        }
    }
}

impl CompositeMinimaxProblem for ScalarLinear {
    fn name(&self) -> String {
        "scalar-linear".into()
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
    fn c_eval(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![x[0]]
    }
    fn c_jvp(&self, _x: &[f64], _y: &[f64], v: &[f64]) -> Vec<f64> {
        vec![v[0]]
    }
    fn c_vjp(&self, _x: &[f64], _y: &[f64], u: &[f64]) -> Vec<f64> {
        vec![u[0]]
    }
    fn h_eval(&self, z: &[f64], _y: &[f64]) -> f64 {
        z[0]
    }
    fn h_subgrad(&self, _z: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
    fn grad_y(&self, _x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![0.0]
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
        Some((x[0], vec![0.0]))
    }
    fn h_support(&self, _y: &[f64]) -> Option<SupportSet> {
        Some(SupportSet::new(vec![SupportBlock::Point(vec![1.0])]))
    }
}

/// `F(x, y) = xy` on `[-1, 1]²`, as `h = id`, `c(x) = xy`.
pub struct BoxBilinear {
    set: ConvexSet,
    constants: ProblemConstants,
}

impl BoxBilinear {
    pub fn new() -> Self {
        Self {
            set: ConvexSet::cube(1, -1.0, 1.0),
            constants: ProblemConstants::new(1.0, 1.0, 2.0).unwrap(),
        }
    }
}

impl CompositeMinimaxProblem for BoxBilinear {
    fn name(&self) -> String {
        "box-bilinear".into()
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
        vec![x[0] * y[0]]
    }
    fn c_jvp(&self, _x: &[f64], y: &[f64], v: &[f64]) -> Vec<f64> {
        vec![y[0] * v[0]]
    }
    fn c_vjp(&self, _x: &[f64], y: &[f64], u: &[f64]) -> Vec<f64> {
        vec![y[0] * u[0]]
    }
    fn h_eval(&self, z: &[f64], _y: &[f64]) -> f64 {
        z[0]
    }
    fn h_subgrad(&self, _z: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
    fn grad_y(&self, x: &[f64], _y: &[f64]) -> Vec<f64> {
        vec![x[0]]
    }
    fn set_x(&self) -> &ConvexSet {
        &self.set
    }
    fn set_y(&self) -> &ConvexSet {
        &self.set
    }
    fn constants(&self) -> &ProblemConstants {
        &self.constants
    }
    fn max_oracle(&self, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        Some((x[0].abs(), vec![if x[0] >= 0.0 { 1.0 } else { -1.0 }]))
    }
    fn h_support(&self, _y: &[f64]) -> Option<SupportSet> {
        Some(SupportSet::new(vec![SupportBlock::Point(vec![1.0])]))
    }
}

//! Smoothed proximal linear descent ascent (smoothed PLDA) for nonsmooth composite
//! nonconvex-concave minimax problems
//!
//! ```text
//! min_{x ∈ X} max_{y ∈ Y} F(x, y),   F(·, y) = h_y ∘ c_y,
//! ```
//!
//! with convex Lipschitz `h_y`, smooth `c_y` and concave `F(x, ·)`. The crate provides
//! the solver with its parameter theory, two baselines, stationarity diagnostics, a
//! numerical verification harness and Wasserstein DRO problem builders.

pub mod baselines;
pub mod benchmark;
pub mod error;
pub mod linalg;
pub mod problem;
pub mod prox_linear;
pub mod sets;
pub mod solver;
pub mod stationarity;
pub mod support;
pub mod verification;
pub mod wdro;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use problem::{
    derive_parameters, evaluate_f, CompositeMinimaxProblem, DerivedConstants, KlExponent, ProblemConstants, Regime,
};
pub use prox_linear::{solve_subproblem, InnerMethod, InnerSolverConfig, SubproblemSpec};
pub use sets::ConvexSet;
pub use solver::{IterateTrace, PldaConfig, RunOutput, SolverState, TraceOptions};
pub use stationarity::StationarityReport;
pub use support::{SupportBlock, SupportSet};
pub use verification::{CheckReport, KlInstance, ToyId, ToyProblem2D};
pub use wdro::{gradient_gate, GradientGate, LinregWdro, MlpParams, MlpWdro, NormKind};
pub use benchmark::{compare_methods, BenchConfig, Comparison};

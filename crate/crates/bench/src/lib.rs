//! Fixtures shared by the criterion benches.

use splda::wdro::{synth_regression_data, TargetMode};
use splda::{CompositeMinimaxProblem, DerivedConstants, LinregWdro, NormKind, Result, SolverState};

/// A planted linear regression WDRO instance with its benchmark parameters
/// (`r = 1`, `λ = 10`, `α = 0.1`, `β = 0.01`) and a start at zero.
pub fn linreg_fixture(n: usize, d: usize, p: NormKind) -> Result<(LinregWdro, DerivedConstants, SolverState)> {
    let data = synth_regression_data(n, d, 7, TargetMode::Planted)?;
    let problem = LinregWdro::new(data, 1.0, p)?;
    let params = DerivedConstants::practical(problem.constants(), 1.0, 10.0, 0.1, 0.01)?;
    let y0 = vec![1.0 / problem.dim_y() as f64; problem.dim_y()];
    let state = SolverState::initial(&problem, &vec![0.0; problem.dim_x()], &y0, None)?;
    Ok((problem, params, state))
}

/// A start point away from the stationary set for the planar problems.
pub fn planar_state<P: CompositeMinimaxProblem + ?Sized>(problem: &P) -> Result<SolverState> {
    let y0 = vec![0.0; problem.dim_y()];
    SolverState::initial(problem, &vec![0.7; problem.dim_x()], &y0, None)
}

//! Piecewise-linear finite elements for the homogenised boundary value
//! problem on `[a, b]` with forcing `f(x) = -μx`.

mod constants;
mod mesh;
mod solution;
mod solver;
mod system;

pub use constants::{constants, APrioriBounds, ErrorConstants};
pub use mesh::Mesh;
pub use solution::{error_norms, BvpSolution, ErrorNorms, SolveDiagnostics};
pub use solver::{SolverKind, AUTO_DIRECT_LIMIT};
pub use system::FemSystem;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Builds the Galerkin system for `(params, b)` on `n` uniform elements.
pub fn assemble(params: &ModelParams, b: f64, n: usize) -> Result<FemSystem> {
    FemSystem::build(params, b, n)
}

/// Solves the assembled system with the default solver choice.
pub fn solve(system: &FemSystem) -> Result<BvpSolution> {
    solve_with(system, SolverKind::Auto)
}

pub fn solve_with(system: &FemSystem, kind: SolverKind) -> Result<BvpSolution> {
    let mesh = system.mesh().clone();
    let load_max = system.load().iter().fold(0.0, |m: f64, x| m.max(x.abs()));
    if load_max == 0.0 {
        let zeros = vec![0.0; system.dim()];
        return Ok(BvpSolution::new(
            mesh,
            zeros,
            *system.params(),
            kind.resolve(system),
            0,
            0.0,
            0.0,
        ));
    }
    let (x, stats) = solver::solve_system(system, kind).map_err(|e| {
        let h0 = constants(system.params(), mesh.b()).h0;
        Error::Singular {
            detail: e.0,
            h: mesh.h(),
            h0,
        }
    })?;
    let ax = system.matvec(&x);
    let residual_max = ax
        .iter()
        .zip(system.load())
        .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs()));
    Ok(BvpSolution::new(
        mesh,
        x,
        *system.params(),
        stats.kind,
        stats.iterations,
        residual_max,
        load_max,
    ))
}

/// Assembles and solves in one call.
pub fn solve_problem(params: &ModelParams, b: f64, n: usize) -> Result<BvpSolution> {
    solve(&assemble(params, b, n)?)
}

pub fn derivative_at_b(sol: &BvpSolution) -> f64 {
    sol.derivative_at_b()
}

pub fn eval(sol: &BvpSolution, x: f64) -> f64 {
    sol.eval(x)
}

pub fn value_function(sol: &BvpSolution, x: f64) -> f64 {
    sol.value_function(x)
}

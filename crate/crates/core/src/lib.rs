//! Optimal closing of a pair trade whose spread follows an Ornstein-Uhlenbeck
//! type process with compound-Poisson jumps.
//!
//! With the stop-loss level `a < 0` fixed, the closing threshold `b` and the
//! value function `u` solve an integro-differential free boundary problem.
//! After the shift `v(x) = u(x) - x` this becomes
//!
//! ```text
//!   -½σ² v''(x) + μ x v'(x) - λ ∫ (v(x+y) - v(x)) φ(y) dy = -μ x,   x ∈ (a, b)
//!   v(x) = 0 outside (a, b),   v'(b) = 0
//! ```
//!
//! The crate is organised as:
//!
//! * [`model`]: parameters, the truncated-normal jump density and the jump
//!   (integral) part of the generator.
//! * [`fem`]: piecewise-linear Galerkin discretisation of the boundary value
//!   problem on `[a, b]`, linear solvers and the explicit error constants.
//! * [`boundary`]: `F_N(b) = v_N'(b)`, root bracketing, bisection for `b_N`
//!   and convergence studies in `N`.
//! * [`verify`]: checks of the verification-theorem hypotheses, a Monte Carlo
//!   estimator of `E_x[U_{τ_a ∧ τ_b}]` and a shooting oracle for `λ = 0`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod boundary;
pub mod error;
pub mod fem;
pub mod model;
pub mod quadrature;
pub mod verify;

pub use boundary::{
    bracket_root, convergence_study, f_n, find_boundary, BoundaryOptions, ConvergenceReport, ConvergenceRow,
    FreeBoundaryResult,
};
pub use error::{Error, Result};
pub use fem::{
    assemble, constants, derivative_at_b, eval, solve, value_function, BvpSolution, ErrorConstants,
    FemSystem, Mesh, SolverKind,
};
pub use model::{apply_jump_operator, density, density_cdf, JumpDensity, ModelParams};
pub use verify::{
    check_condition_a, check_condition_b, check_conditions, ode_oracle, simulate_stopped_value,
    ConditionAReport, ConditionBReport, ConditionReport, McEstimate, OdeReference,
};

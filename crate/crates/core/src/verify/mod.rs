//! Evidence that the computed `(u, b)` is the value function and optimal
//! threshold: the two verification hypotheses, a Monte Carlo estimate of
//! `E_x[U_{τ_a ∧ τ_b}]`, and an independent reference for `λ = 0`.

mod conditions;
mod montecarlo;
mod ode;

pub use conditions::{
    check_condition_a, check_condition_a_with, check_condition_b, check_conditions, check_conditions_with,
    ConditionAReport, ConditionBReport, ConditionReport, ConditionSample, Integrand,
    DEFAULT_CONDITION_SAMPLES,
};
pub use montecarlo::{
    default_dt, ou_transition, simulate_stopped_value, simulate_with, McEstimate, McOptions,
};
pub use ode::{ode_free_boundary, ode_oracle, ode_oracle_with_forcing, OdeReference};

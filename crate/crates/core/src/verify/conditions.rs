use serde::Serialize;

use crate::fem::BvpSolution;
use crate::model::{JumpDensity, PiecewiseLinear};

pub const DEFAULT_CONDITION_SAMPLES: usize = 512;

/// Function integrated against the jump density on the left-hand side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrand {
    /// `v = u - x`, the form the generator inequality reduces to
    #[default]
    Shifted,
    /// `u = v + x` on `(a, b)`; diagnostic only, not equivalent to the
    /// generator inequality
    Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionSample {
    pub x: f64,
    /// `λ ∫_a^b v(y) φ(y - x) dy`
    pub lhs: f64,
    /// `μ x`
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionAReport {
    pub holds: bool,
    /// `min (rhs - lhs)` over the samples
    pub worst_margin: f64,
    pub worst_x: f64,
    pub curve: Vec<ConditionSample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionBReport {
    pub holds: bool,
    pub min_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition_a_holds: bool,
    pub worst_margin: f64,
    pub worst_x: f64,
    pub margin_curve: Vec<ConditionSample>,
    pub condition_b_holds: bool,
    pub min_v: f64,
}

/// Generator inequality above the boundary,
/// `λ ∫_a^b v(y) φ(y - x) dy ≤ μ x` for `x > b`, sampled at `n_samples`
/// uniform points of `(b, b + J]`. Past `b + J` the integral vanishes and
/// the inequality holds since `μ x > 0`.
pub fn check_condition_a(
    sol: &BvpSolution,
    lambda: f64,
    density: &JumpDensity,
    n_samples: usize,
) -> ConditionAReport {
    check_condition_a_with(sol, lambda, density, n_samples, Integrand::Shifted)
}

/// As [`check_condition_a`] with a choice of integrand.
pub fn check_condition_a_with(
    sol: &BvpSolution,
    lambda: f64,
    density: &JumpDensity,
    n_samples: usize,
    integrand: Integrand,
) -> ConditionAReport {
    let b = sol.b();
    let mu = sol.params().mu;
    let j = density.jmax();
    let nodes = sol.mesh().nodes();
    let shifted: Vec<f64>;
    let values = match integrand {
        Integrand::Shifted => sol.coeffs(),
        Integrand::Value => {
            shifted = sol.coeffs().iter().zip(nodes).map(|(v, x)| v + x).collect();
            &shifted
        }
    };
    let v = PiecewiseLinear::new(nodes, values);
    let n_samples = n_samples.max(1);
    let curve: Vec<ConditionSample> = (1..=n_samples)
        .map(|i| {
            let x = b + j * i as f64 / n_samples as f64;
            let lhs = if lambda == 0.0 {
                0.0
            } else {
                lambda * density.convolve(v, x)
            };
            ConditionSample { x, lhs, rhs: mu * x }
        })
        .collect();
    let (worst_margin, worst_x) = curve
        .iter()
        .map(|s| (s.rhs - s.lhs, s.x))
        .fold((f64::INFINITY, b), |best, c| if c.0 < best.0 { c } else { best });
    ConditionAReport {
        holds: worst_margin >= 0.0,
        worst_margin,
        worst_x,
        curve,
    }
}

/// `v_N ≥ 0` at every node, up to `-1e-12`.
pub fn check_condition_b(sol: &BvpSolution) -> ConditionBReport {
    let min_v = sol.min_value();
    ConditionBReport {
        holds: min_v >= -1e-12,
        min_v,
    }
}

pub fn check_conditions(sol: &BvpSolution, n_samples: usize) -> ConditionReport {
    check_conditions_with(sol, n_samples, Integrand::Shifted)
}

pub fn check_conditions_with(sol: &BvpSolution, n_samples: usize, integrand: Integrand) -> ConditionReport {
    let p = sol.params();
    let a = check_condition_a_with(sol, p.lambda, &p.density(), n_samples, integrand);
    let b = check_condition_b(sol);
    ConditionReport {
        condition_a_holds: a.holds,
        worst_margin: a.worst_margin,
        worst_x: a.worst_x,
        margin_curve: a.curve,
        condition_b_holds: b.holds,
        min_v: b.min_v,
    }
}

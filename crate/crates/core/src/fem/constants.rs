//! Explicit constants of the existence and error analysis.

use serde::Serialize;

use crate::model::ModelParams;

/// Constants for given parameters and right endpoint `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorConstants {
    /// boundedness: `|A(u, v)| ≤ c1 ‖Du‖ ‖Dv‖`
    pub c1: f64,
    /// Poincaré constant `(b - a)/π`
    pub c2: f64,
    /// `‖D²v‖ ≤ c3 ‖f‖`, `c3 = c7 + c6 c8`
    pub c3: f64,
    /// maximum principle: `‖v‖_∞ ≤ c4 ‖f‖_∞`, `c4 = exp(γ̂ (b - a))`
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    /// `|v'(b) - v_N'(b)| ≤ c11 h^½` for `f = -μx`
    pub c11: f64,
    /// `c11 (b - a)^½`, so that `|F - F_N| ≤ c12 N^{-½}`
    pub c12: f64,
    pub gamma_hat: f64,
    /// mesh size below which the discrete problem is uniquely solvable
    pub h0: f64,
    /// `‖f‖` for `f(x) = -μx` on `(a, b)`
    pub norm_f: f64,
}

/// A-priori error bounds for a mesh size `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct APrioriBounds {
    pub h: f64,
    /// `4 c1² c3² σ⁻² h²`
    pub l2_factor: f64,
    /// `4 c1 c3 σ⁻² h`
    pub h1_factor: f64,
    /// `l2_factor ‖f‖`
    pub l2: f64,
    /// `h1_factor ‖f‖`
    pub h1: f64,
    /// `c11 h^½`
    pub derivative: f64,
}

impl ErrorConstants {
    pub fn a_priori(&self, sigma: f64, h: f64) -> APrioriBounds {
        let s2 = sigma * sigma;
        let l2_factor = 4.0 * self.c1 * self.c1 * self.c3 * self.c3 / s2 * h * h;
        let h1_factor = 4.0 * self.c1 * self.c3 / s2 * h;
        APrioriBounds {
            h,
            l2_factor,
            h1_factor,
            l2: l2_factor * self.norm_f,
            h1: h1_factor * self.norm_f,
            derivative: self.c11 * h.sqrt(),
        }
    }
}

pub fn constants(params: &ModelParams, b: f64) -> ErrorConstants {
    let ModelParams {
        mu, sigma, lambda, a, ..
    } = *params;
    let s2 = sigma * sigma;
    let len = b - a;
    let xmax = a.abs().max(b.abs());

    let c2 = len / std::f64::consts::PI;
    // ½σ² + c2 μ max(|a|,|b|) + 2λ c2²
    let c1 = 0.5 * s2 + c2 * mu * xmax + 2.0 * lambda * c2 * c2;
    let gamma_hat = mu * b / s2 + (2.0 * (lambda + 1.0) / s2).sqrt();
    let c4 = (gamma_hat * len).exp();
    let c5 = len * c4;
    let c6 = c2 * (2.0 / (s2 * mu) + 4.0 / (s2 * s2 * mu * mu) * c5 * c5).sqrt();
    let c7 = 4.0 / s2;
    let c8 = 4.0 / s2 * (2.0 * lambda + mu + mu * mu * xmax * xmax / s2);
    let c3 = c7 + c6 * c8;
    let h0 = sigma / (std::f64::consts::SQRT_2 * mu.sqrt() * c1 * c3);
    let c9 = 4.0 * c1 / s2;
    let c10 = 2.0 + 4.0 * c1 * c3 / s2;
    let norm_f = mu * ((b.powi(3) - a.powi(3)) / 3.0).sqrt();
    let c11 = c10 * norm_f;
    let c12 = c11 * len.sqrt();
    ErrorConstants {
        c1,
        c2,
        c3,
        c4,
        c5,
        c6,
        c7,
        c8,
        c9,
        c10,
        c11,
        c12,
        gamma_hat,
        h0,
        norm_f,
    }
}

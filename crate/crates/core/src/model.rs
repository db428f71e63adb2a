//! Model parameters, the truncated-normal jump density and the jump part of
//! the generator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Market and model scalars of the spread dynamics
/// `dU = -μ U dt + σ dW + dC`, with `C` compound Poisson (intensity `λ`,
/// jump density φ with scale `γ` truncated to `(-J, J)`), and the stop-loss
/// level `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub mu: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub a: f64,
    pub gamma: f64,
    pub jmax: f64,
}

impl ModelParams {
    pub fn new(mu: f64, sigma: f64, lambda: f64, a: f64, gamma: f64, jmax: f64) -> Result<Self> {
        let p = ModelParams {
            mu,
            sigma,
            lambda,
            a,
            gamma,
            jmax,
        };
        p.validate()?;
        Ok(p)
    }

    /// The parameter set used throughout the reference computations:
    /// `a = -0.1, λ = 10, σ = 0.2, μ = σ²/0.005 = 8, γ = 0.02, J = 0.05`.
    pub fn reference() -> Self {
        ModelParams {
            mu: 0.2 * 0.2 / 0.005,
            sigma: 0.2,
            lambda: 10.0,
            a: -0.1,
            gamma: 0.02,
            jmax: 0.05,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn positive(field: &'static str, x: f64) -> Result<()> {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and > 0, got {x}")))
            }
        }
        positive("mu", self.mu)?;
        positive("sigma", self.sigma)?;
        positive("gamma", self.gamma)?;
        positive("jmax", self.jmax)?;
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::invalid(
                "lambda",
                format!("must be finite and >= 0, got {}", self.lambda),
            ));
        }
        if !(self.a.is_finite() && self.a < 0.0) {
            return Err(Error::invalid(
                "a",
                format!("must be finite and < 0, got {}", self.a),
            ));
        }
        Ok(())
    }

    pub fn density(&self) -> JumpDensity {
        JumpDensity::new(self.gamma, self.jmax).expect("validated parameters")
    }
}

/// Normal density with scale `gamma`, truncated to `(-jmax, jmax)` and
/// renormalised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpDensity {
    gamma: f64,
    jmax: f64,
    /// `erf(J / (γ√2)) = 2Φ(J/γ) - 1`
    mass: f64,
    norm_const: f64,
}

impl JumpDensity {
    pub fn new(gamma: f64, jmax: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("must be > 0, got {gamma}")));
        }
        if !(jmax.is_finite() && jmax > 0.0) {
            return Err(Error::invalid("jmax", format!("must be > 0, got {jmax}")));
        }
        let mass = libm::erf(jmax / (gamma * SQRT_2));
        Ok(JumpDensity {
            gamma,
            jmax,
            mass,
            norm_const: 1.0 / (gamma * SQRT_2PI * mass),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn jmax(&self) -> f64 {
        self.jmax
    }

    /// `1 / (γ √(2π) (2Φ(J/γ) - 1))`
    pub fn norm_const(&self) -> f64 {
        self.norm_const
    }

    pub fn density(&self, y: f64) -> f64 {
        if y.abs() >= self.jmax {
            return 0.0;
        }
        let z = y / self.gamma;
        self.norm_const * (-0.5 * z * z).exp()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= -self.jmax {
            0.0
        } else if y >= self.jmax {
            1.0
        } else {
            0.5 * (libm::erf(y / (self.gamma * SQRT_2)) / self.mass + 1.0)
        }
    }

    fn clip(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let lo = lo.max(-self.jmax);
        let hi = hi.min(self.jmax);
        (lo < hi).then_some((lo, hi))
    }

    /// `∫_lo^hi φ(s) ds`
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        let Some((lo, hi)) = self.clip(lo, hi) else {
            return 0.0;
        };
        let s = self.gamma * SQRT_2;
        // use the complementary function in the tails to keep digits
        let diff = if lo >= 0.0 {
            libm::erfc(lo / s) - libm::erfc(hi / s)
        } else if hi <= 0.0 {
            libm::erfc(-hi / s) - libm::erfc(-lo / s)
        } else {
            libm::erf(hi / s) - libm::erf(lo / s)
        };
        0.5 * diff / self.mass
    }

    /// `∫_lo^hi s φ(s) ds`
    pub fn first_moment_between(&self, lo: f64, hi: f64) -> f64 {
        let Some((lo, hi)) = self.clip(lo, hi) else {
            return 0.0;
        };
        // γ² K (e^{-lo²/2γ²} - e^{-hi²/2γ²}), evaluated without cancellation
        let g2 = self.gamma * self.gamma;
        let p = lo * lo / (2.0 * g2);
        let q = hi * hi / (2.0 * g2);
        let dq = (hi - lo) * (hi + lo) / (2.0 * g2);
        let diff = if p <= q {
            -(-p).exp() * (-dq).exp_m1()
        } else {
            (-q).exp() * dq.exp_m1()
        };
        g2 * self.norm_const * diff
    }

    /// `∫_{y0}^{y1} φ(x - y) v(y) dy` for `v` linear from `v0` at `y0` to
    /// `v1` at `y1`.
    pub fn linear_segment_convolution(&self, x: f64, y0: f64, y1: f64, v0: f64, v1: f64) -> f64 {
        let (alpha, beta) = (x - y1, x - y0);
        if alpha >= self.jmax || beta <= -self.jmax {
            return 0.0;
        }
        let m0 = self.mass_between(alpha, beta);
        let s_mid = x - 0.5 * (y0 + y1);
        let v_mid = 0.5 * (v0 + v1);
        let slope = (v1 - v0) / (y1 - y0);
        let m1_centered = self.first_moment_between(alpha, beta) - s_mid * m0;
        v_mid * m0 - slope * m1_centered
    }

    /// `∫ φ(x - y) v(y) dy` for the continuous piecewise-linear `v`, taken as
    /// zero outside its nodes.
    pub fn convolve(&self, v: PiecewiseLinear<'_>, x: f64) -> f64 {
        let nodes = v.nodes;
        if nodes.len() < 2 {
            return 0.0;
        }
        // elements [y_k, y_{k+1}] meeting (x - J, x + J)
        let first = nodes.partition_point(|&y| y <= x - self.jmax).saturating_sub(1);
        let last = nodes.partition_point(|&y| y < x + self.jmax).min(nodes.len() - 1);
        let mut acc = 0.0;
        for k in first..last {
            acc += self.linear_segment_convolution(x, nodes[k], nodes[k + 1], v.values[k], v.values[k + 1]);
        }
        acc
    }

    /// Inverse of [`JumpDensity::cdf`] by bisection to an absolute width of
    /// `1e-12`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (-self.jmax, self.jmax);
        for _ in 0..200 {
            if hi - lo <= 1e-12 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Draws one jump size by inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.inverse_cdf(rng.gen::<f64>())
    }
}

/// Continuous piecewise-linear function given by nodal values; zero outside
/// `[nodes[0], nodes[last]]`.
#[derive(Debug, Clone, Copy)]
pub struct PiecewiseLinear<'a> {
    pub nodes: &'a [f64],
    pub values: &'a [f64],
}

impl<'a> PiecewiseLinear<'a> {
    pub fn new(nodes: &'a [f64], values: &'a [f64]) -> Self {
        assert_eq!(nodes.len(), values.len(), "nodes and values differ in length");
        PiecewiseLinear { nodes, values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.nodes.len();
        if n == 0 || x < self.nodes[0] || x > self.nodes[n - 1] {
            return 0.0;
        }
        let k = self.nodes.partition_point(|&y| y <= x);
        if k == 0 {
            return self.values[0];
        }
        let k = k - 1;
        if x == self.nodes[k] || k == n - 1 {
            return self.values[k];
        }
        let t = (x - self.nodes[k]) / (self.nodes[k + 1] - self.nodes[k]);
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }
}

pub fn density(d: &JumpDensity, y: f64) -> f64 {
    d.density(y)
}

pub fn density_cdf(d: &JumpDensity, y: f64) -> f64 {
    d.cdf(y)
}

/// `ℐv(x) = λ ∫_a^b φ(x - y) v(y) dy - λ v(x)` for piecewise-linear `v`
/// extended by zero.
pub fn apply_jump_operator(d: &JumpDensity, lambda: f64, v: PiecewiseLinear<'_>, x: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * (d.convolve(v, x) - v.eval(x))
}

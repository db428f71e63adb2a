//! Jump-free reference: `-½σ² v'' + μ x v' = -s μ x`, `v(a) = v(b) = 0`,
//! solved by linear shooting with classical Runge-Kutta and Richardson
//! extrapolation under step doubling.

use crate::error::{Error, Result};
use crate::model::ModelParams;

#[derive(Debug, Clone)]
pub struct OdeReference {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
    v: Vec<f64>,
    dv: Vec<f64>,
    /// last change between successive extrapolated solutions
    pub achieved_tol: f64,
}

impl OdeReference {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        if x < self.a || x > self.b {
            return None;
        }
        let n = self.nodes.len() - 1;
        let k = self.nodes.partition_point(|&y| y <= x).clamp(1, n) - 1;
        let h = self.nodes[k + 1] - self.nodes[k];
        Some((k, (x - self.nodes[k]) / h))
    }

    /// Cubic Hermite interpolation of the nodal `v`, `v'`; zero outside.
    pub fn eval(&self, x: f64) -> f64 {
        let Some((k, t)) = self.locate(x) else {
            return 0.0;
        };
        let h = self.nodes[k + 1] - self.nodes[k];
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.v[k] + h10 * h * self.dv[k] + h01 * self.v[k + 1] + h11 * h * self.dv[k + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let Some((k, t)) = self.locate(x) else {
            return 0.0;
        };
        let h = self.nodes[k + 1] - self.nodes[k];
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * self.v[k] + d10 * self.dv[k] + d01 * self.v[k + 1] + d11 * self.dv[k + 1]
    }

    /// `v'(b)`, the jump-free `F(b)`.
    pub fn slope_at_b(&self) -> f64 {
        *self.dv.last().unwrap()
    }
}

/// `(v, w)` at every step of an RK4 march from `a` to `b` with `m` steps for
/// `v' = w`, `w' = k x (w + s)`.
fn march(a: f64, b: f64, m: usize, k: f64, s: f64, w0: f64) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / m as f64;
    let rhs = |x: f64, w: f64| k * x * (w + s);
    let mut v = Vec::with_capacity(m + 1);
    let mut w = Vec::with_capacity(m + 1);
    let (mut vc, mut wc) = (0.0, w0);
    v.push(vc);
    w.push(wc);
    for i in 0..m {
        let x = a + (b - a) * (i as f64 / m as f64);
        let k1v = wc;
        let k1w = rhs(x, wc);
        let k2v = wc + 0.5 * h * k1w;
        let k2w = rhs(x + 0.5 * h, wc + 0.5 * h * k1w);
        let k3v = wc + 0.5 * h * k2w;
        let k3w = rhs(x + 0.5 * h, wc + 0.5 * h * k2w);
        let k4v = wc + h * k3w;
        let k4w = rhs(x + h, wc + h * k3w);
        vc += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        wc += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        v.push(vc);
        w.push(wc);
    }
    (v, w)
}

/// Shooting solution on `m` steps: particular plus multiple of homogeneous.
fn shoot(a: f64, b: f64, m: usize, k: f64, s: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (pv, pw) = march(a, b, m, k, s, 0.0);
    let (qv, qw) = march(a, b, m, k, 0.0, 1.0);
    let qb = qv[m];
    if !(qb.is_finite() && pv[m].is_finite()) || qb == 0.0 {
        return Err(Error::Integrator(format!(
            "non-finite or degenerate shooting values at b (p = {}, q = {qb}) with {m} steps",
            pv[m]
        )));
    }
    let c = -pv[m] / qb;
    let v = pv.iter().zip(&qv).map(|(p, q)| p + c * q).collect();
    let w = pw.iter().zip(&qw).map(|(p, q)| p + c * q).collect();
    Ok((v, w))
}

pub fn ode_oracle(params: &ModelParams, b: f64, tol: f64) -> Result<OdeReference> {
    ode_oracle_with_forcing(params, b, 1.0, tol)
}

/// Reference for forcing `f(x) = -s μ x`. Requires `λ = 0`.
pub fn ode_oracle_with_forcing(params: &ModelParams, b: f64, s: f64, tol: f64) -> Result<OdeReference> {
    params.validate()?;
    if params.lambda != 0.0 {
        return Err(Error::invalid(
            "lambda",
            "the shooting reference needs lambda = 0",
        ));
    }
    if !(b > params.a) {
        return Err(Error::invalid("b", format!("need b > a, got {b}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", format!("must be > 0, got {tol}")));
    }
    let a = params.a;
    let k = 2.0 * params.mu / (params.sigma * params.sigma);
    let extrapolate = |m: usize| -> Result<(Vec<f64>, Vec<f64>)> {
        let (v1, w1) = shoot(a, b, m, k, s)?;
        let (v2, w2) = shoot(a, b, 2 * m, k, s)?;
        let v = (0..=m).map(|i| (16.0 * v2[2 * i] - v1[i]) / 15.0).collect();
        let w = (0..=m).map(|i| (16.0 * w2[2 * i] - w1[i]) / 15.0).collect();
        Ok((v, w))
    };
    let mut m = 64;
    let mut prev = extrapolate(m)?;
    loop {
        let next = extrapolate(2 * m)?;
        let nodal = (0..=m)
            .map(|i| {
                (next.0[2 * i] - prev.0[i])
                    .abs()
                    .max((next.1[2 * i] - prev.1[i]).abs() * (b - a))
            })
            .fold(0.0, f64::max);
        // Hermite interpolation of the coarser grid at the new midpoints
        let hc = (b - a) / m as f64;
        let interp = (0..m)
            .map(|i| {
                let (v0, v1, d0, d1) = (prev.0[i], prev.0[i + 1], prev.1[i], prev.1[i + 1]);
                let v_mid = 0.5 * (v0 + v1) + hc / 8.0 * (d0 - d1);
                let d_mid = 1.5 * (v1 - v0) / hc - 0.25 * (d0 + d1);
                (v_mid - next.0[2 * i + 1])
                    .abs()
                    .max((d_mid - next.1[2 * i + 1]).abs() * (b - a))
            })
            .fold(0.0, f64::max);
        let change = nodal.max(interp);
        m *= 2;
        if change <= tol {
            let nodes = (0..=m).map(|i| a + (b - a) * (i as f64 / m as f64)).collect();
            let (mut v, w) = next;
            v[0] = 0.0;
            v[m] = 0.0;
            return Ok(OdeReference {
                a,
                b,
                nodes,
                v,
                dv: w,
                achieved_tol: change,
            });
        }
        if m > (1 << 22) {
            return Err(Error::Integrator(format!(
                "tolerance {tol:.1e} not reached; last change {change:.3e} at {m} steps"
            )));
        }
        prev = next;
    }
}

/// Root of `b ↦ v'(b)` for the jump-free reference, by bisection on
/// `[lo, hi]` until the width is below `2 tol_b`.
pub fn ode_free_boundary(params: &ModelParams, lo: f64, hi: f64, tol_b: f64) -> Result<f64> {
    let slope = |b: f64| -> Result<f64> { Ok(ode_oracle(params, b, 1e-12)?.slope_at_b()) };
    let (mut lo, mut hi) = (lo, hi);
    let (flo, fhi) = (slope(lo)?, slope(hi)?);
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::NoSignChange {
            samples: vec![(lo, flo), (hi, fhi)],
        });
    }
    while hi - lo > 2.0 * tol_b {
        let mid = 0.5 * (lo + hi);
        if slope(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

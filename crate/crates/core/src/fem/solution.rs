use serde::Serialize;

use super::constants::constants;
use super::mesh::Mesh;
use super::solver::SolverKind;
use crate::error::{Error, Result};
use crate::model::{ModelParams, PiecewiseLinear};
use crate::quadrature::{gl4, integrate};

/// How a [`BvpSolution`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub solver: SolverKind,
    pub iterations: usize,
    /// `max_j |(A v - F)_j|`
    pub residual_max: f64,
    pub load_max: f64,
    pub h: f64,
    pub h0: f64,
}

impl SolveDiagnostics {
    /// Ratio of the mesh size to the guaranteed-uniqueness threshold.
    pub fn h_over_h0(&self) -> f64 {
        self.h / self.h0
    }
}

/// Nodal values of the piecewise-linear `v_N` on `[a, b]`, boundary values
/// included (and exactly zero).
#[derive(Debug, Clone)]
pub struct BvpSolution {
    mesh: Mesh,
    coeffs: Vec<f64>,
    params: ModelParams,
    diagnostics: SolveDiagnostics,
}

impl BvpSolution {
    pub(crate) fn new(
        mesh: Mesh,
        interior: Vec<f64>,
        params: ModelParams,
        solver: SolverKind,
        iterations: usize,
        residual_max: f64,
        load_max: f64,
    ) -> Self {
        let mut coeffs = Vec::with_capacity(interior.len() + 2);
        coeffs.push(0.0);
        coeffs.extend(interior);
        coeffs.push(0.0);
        let h0 = constants(&params, mesh.b()).h0;
        let h = mesh.h();
        BvpSolution {
            mesh,
            coeffs,
            params,
            diagnostics: SolveDiagnostics {
                solver,
                iterations,
                residual_max,
                load_max,
                h,
                h0,
            },
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn b(&self) -> f64 {
        self.mesh.b()
    }

    pub fn diagnostics(&self) -> &SolveDiagnostics {
        &self.diagnostics
    }

    pub fn as_piecewise(&self) -> PiecewiseLinear<'_> {
        PiecewiseLinear::new(self.mesh.nodes(), &self.coeffs)
    }

    /// `v_N(x)`, zero outside `(a, b)`.
    pub fn eval(&self, x: f64) -> f64 {
        self.as_piecewise().eval(x)
    }

    /// `v_N'(x)` for `x` inside an element (right derivative at nodes,
    /// left derivative at `b`); zero outside `[a, b]`.
    pub fn derivative(&self, x: f64) -> f64 {
        let nodes = self.mesh.nodes();
        let n = self.mesh.elements();
        if x < nodes[0] || x > nodes[n] {
            return 0.0;
        }
        let k = nodes.partition_point(|&y| y <= x).clamp(1, n) - 1;
        (self.coeffs[k + 1] - self.coeffs[k]) / (nodes[k + 1] - nodes[k])
    }

    /// One-sided derivative at `b`: `(v_N(x_N) - v_N(x_{N-1}))/h`.
    pub fn derivative_at_b(&self) -> f64 {
        let n = self.mesh.elements();
        (self.coeffs[n] - self.coeffs[n - 1]) / self.mesh.h()
    }

    /// `u(x) = v_N(x) + x` on `[a, b]` and `u(x) = x` elsewhere.
    pub fn value_function(&self, x: f64) -> f64 {
        self.eval(x) + x
    }

    pub fn min_value(&self) -> f64 {
        self.coeffs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest nodal value and its location.
    pub fn max_value(&self) -> (f64, f64) {
        self.coeffs
            .iter()
            .zip(self.mesh.nodes())
            .fold(
                (f64::NEG_INFINITY, 0.0),
                |best, (&v, &x)| if v > best.0 { (v, x) } else { best },
            )
    }
}

/// Distances between two solutions on the same interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// `‖v - w‖_{L2}`
    pub l2: f64,
    /// `‖v' - w'‖_{L2}`
    pub h1: f64,
    /// `|v'(b) - w'(b)|`
    pub derivative_at_b: f64,
}

/// `‖v - w‖` in L2 and the H1 seminorm, with 4-point Gauss on every interval
/// between consecutive nodes of either mesh (exact for piecewise linears).
pub fn error_norms(v: &BvpSolution, w: &BvpSolution) -> Result<ErrorNorms> {
    let (mv, mw) = (v.mesh(), w.mesh());
    if mv.a() != mw.a() || mv.b() != mw.b() {
        return Err(Error::invalid(
            "b",
            format!(
                "solutions live on [{}, {}] and [{}, {}]",
                mv.a(),
                mv.b(),
                mw.a(),
                mw.b()
            ),
        ));
    }
    let mut pts: Vec<f64> = mv.nodes().iter().chain(mw.nodes()).copied().collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * (mv.b() - mv.a()));
    let rule = gl4();
    let (mut l2, mut h1) = (0.0, 0.0);
    for seg in pts.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        l2 += integrate(rule, lo, hi, |x| (v.eval(x) - w.eval(x)).powi(2));
        h1 += integrate(rule, lo, hi, |x| (v.derivative(x) - w.derivative(x)).powi(2));
    }
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1: h1.sqrt(),
        derivative_at_b: (v.derivative_at_b() - w.derivative_at_b()).abs(),
    })
}

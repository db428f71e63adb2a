//! The free boundary: `F_N(b) = v_N'(b)` as a function of `b`, its root
//! `b_N`, and the behaviour of `b_N` as `N` grows.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{self, constants, BvpSolution, SolverKind};
use crate::model::ModelParams;

/// Knobs of the bracketing search and of the linear solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryOptions {
    /// First trial `b`; `None` means `0.1 |a|`.
    pub b_init: Option<f64>,
    pub growth: f64,
    pub max_expansions: usize,
    pub solver: SolverKind,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions {
            b_init: None,
            growth: 1.5,
            max_expansions: 60,
            solver: SolverKind::Auto,
        }
    }
}

impl BoundaryOptions {
    fn b_init_for(&self, params: &ModelParams) -> f64 {
        self.b_init.unwrap_or(0.1 * params.a.abs())
    }
}

pub const DEFAULT_TOL_B: f64 = 1e-6;

/// `F_N(b)`: assemble on `[a, b]` with `n` elements, solve, and return the
/// one-sided derivative at `b`.
pub fn f_n(params: &ModelParams, b: f64, n: usize) -> Result<f64> {
    f_n_with(params, b, n, SolverKind::Auto)
}

pub fn f_n_with(params: &ModelParams, b: f64, n: usize, solver: SolverKind) -> Result<f64> {
    Ok(solve_at(params, b, n, solver)?.derivative_at_b())
}

fn solve_at(params: &ModelParams, b: f64, n: usize, solver: SolverKind) -> Result<BvpSolution> {
    let sys = fem::assemble(params, b, n)?;
    fem::solve_with(&sys, solver)
}

/// Sign-change interval of `F_N` with the values at its ends and every
/// sample taken while searching.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Geometric search from `b_init` for `b_lo < b_hi` with
/// `F_N(b_lo) < 0 ≤ F_N(b_hi)`. Moves up while `F_N < 0` and down
/// otherwise.
pub fn bracket_root(params: &ModelParams, n: usize, b_init: f64, growth: f64) -> Result<(f64, f64)> {
    let opts = BoundaryOptions {
        b_init: Some(b_init),
        growth,
        ..BoundaryOptions::default()
    };
    let br = bracket_root_with(params, n, &opts)?;
    Ok((br.lo, br.hi))
}

pub fn bracket_root_with(params: &ModelParams, n: usize, opts: &BoundaryOptions) -> Result<Bracket> {
    params.validate()?;
    let b_init = opts.b_init_for(params);
    if !(b_init.is_finite() && b_init > 0.0 && b_init > params.a) {
        return Err(Error::invalid(
            "b_init",
            format!("must be > max(0, a), got {b_init}"),
        ));
    }
    if !(opts.growth.is_finite() && opts.growth > 1.0) {
        return Err(Error::invalid(
            "growth",
            format!("must be > 1, got {}", opts.growth),
        ));
    }
    let eval = |b: f64| f_n_with(params, b, n, opts.solver);
    let mut samples = Vec::new();
    let mut b = b_init;
    let mut f = eval(b)?;
    samples.push((b, f));
    let upward = f < 0.0;
    for _ in 0..opts.max_expansions {
        let next = if upward { b * opts.growth } else { b / opts.growth };
        let fnext = eval(next)?;
        samples.push((next, fnext));
        if upward && fnext >= 0.0 {
            return Ok(Bracket {
                lo: b,
                hi: next,
                f_lo: f,
                f_hi: fnext,
                samples,
            });
        }
        if !upward && fnext < 0.0 {
            return Ok(Bracket {
                lo: next,
                hi: b,
                f_lo: fnext,
                f_hi: f,
                samples,
            });
        }
        b = next;
        f = fnext;
    }
    Err(Error::NoSignChange { samples })
}

/// Root `b_N` of `F_N` together with the solution there.
#[derive(Debug, Clone)]
pub struct FreeBoundaryResult {
    pub b_n: f64,
    /// final bisection interval `(b_lo, b_hi)`
    pub bracket: (f64, f64),
    pub initial_bracket: (f64, f64),
    pub f_lo: f64,
    pub f_hi: f64,
    pub n: usize,
    pub iterations: usize,
    pub f_at_root: f64,
    pub solution: BvpSolution,
}

pub fn find_boundary(params: &ModelParams, n: usize, tol_b: f64) -> Result<FreeBoundaryResult> {
    find_boundary_with(params, n, tol_b, &BoundaryOptions::default())
}

/// Brackets `F_N` and bisects until the interval is at most `2 tol_b` wide.
/// Every trial `b` gets its own uniform mesh with `n` elements.
pub fn find_boundary_with(
    params: &ModelParams,
    n: usize,
    tol_b: f64,
    opts: &BoundaryOptions,
) -> Result<FreeBoundaryResult> {
    if !(tol_b.is_finite() && tol_b > 0.0) {
        return Err(Error::invalid("tol_b", format!("must be > 0, got {tol_b}")));
    }
    let br = bracket_root_with(params, n, opts)?;
    let (mut lo, mut hi) = (br.lo, br.hi);
    let (mut f_lo, mut f_hi) = (br.f_lo, br.f_hi);
    let mut iterations = 0;
    let mut exact = None;
    while hi - lo > 2.0 * tol_b {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let sol = solve_at(params, mid, n, opts.solver)?;
        let f = sol.derivative_at_b();
        iterations += 1;
        if f == 0.0 {
            exact = Some(sol);
            break;
        }
        if f < 0.0 {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
    }
    let solution = match exact {
        Some(sol) => sol,
        None => solve_at(params, 0.5 * (lo + hi), n, opts.solver)?,
    };
    let b_n = solution.b();
    Ok(FreeBoundaryResult {
        b_n,
        bracket: (lo, hi),
        initial_bracket: (br.lo, br.hi),
        f_lo,
        f_hi,
        n,
        iterations,
        f_at_root: solution.derivative_at_b(),
        solution,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub b_n: f64,
    /// `b_n` minus the previous row's `b_n`
    pub delta: Option<f64>,
    pub iterations: usize,
    pub f_at_root: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub params: ModelParams,
    pub tol_b: f64,
    pub rows: Vec<ConvergenceRow>,
    /// `b_n` strictly decreasing along the rows
    pub decreasing: bool,
    /// `|delta|` strictly shrinking along the rows
    pub deltas_shrinking: bool,
}

pub fn convergence_study(params: &ModelParams, ns: &[usize], tol_b: f64) -> Result<ConvergenceReport> {
    convergence_study_with(params, ns, tol_b, &BoundaryOptions::default())
}

pub fn convergence_study_with(
    params: &ModelParams,
    ns: &[usize],
    tol_b: f64,
    opts: &BoundaryOptions,
) -> Result<ConvergenceReport> {
    if ns.is_empty() {
        return Err(Error::invalid("ns", "need at least one element count"));
    }
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("ns", "element counts must be increasing"));
    }
    let results: Vec<Result<FreeBoundaryResult>> = ns
        .par_iter()
        .map(|&n| find_boundary_with(params, n, tol_b, opts))
        .collect();
    let mut rows = Vec::with_capacity(ns.len());
    let mut prev: Option<f64> = None;
    for r in results {
        let r = r?;
        rows.push(ConvergenceRow {
            n: r.n,
            b_n: r.b_n,
            delta: prev.map(|p| r.b_n - p),
            iterations: r.iterations,
            f_at_root: r.f_at_root,
        });
        prev = Some(r.b_n);
    }
    let decreasing = rows.windows(2).all(|w| w[1].b_n < w[0].b_n);
    let deltas: Vec<f64> = rows.iter().filter_map(|r| r.delta).map(f64::abs).collect();
    let deltas_shrinking = deltas.windows(2).all(|w| w[1] < w[0]);
    Ok(ConvergenceReport {
        params: *params,
        tol_b,
        rows,
        decreasing,
        deltas_shrinking,
    })
}

/// Thresholds of the existence argument: `F_Ñ(b1) ≤ lower`,
/// `F_Ñ(b2) ≥ upper` and `ĉ12 Ñ^{-½} < envelope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateThresholds {
    pub lower: f64,
    pub upper: f64,
    pub envelope: f64,
}

impl Default for CertificateThresholds {
    fn default() -> Self {
        CertificateThresholds {
            lower: -0.5,
            upper: 0.5,
            envelope: 0.25,
        }
    }
}

/// Outcome of checking the sign-change certificate on `[b1, b2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    pub b1: f64,
    pub b2: f64,
    pub n: usize,
    pub f_b1: f64,
    pub f_b2: f64,
    /// sup of `c11` over `[b1, b2]`
    pub c11_hat: f64,
    /// inf of `h0` over `[b1, b2]`
    pub h0_hat: f64,
    pub c12_hat: f64,
    /// `(b2 - a)/ĥ0`
    pub n0_hat: f64,
    /// `ĉ12 Ñ^{-½}`
    pub envelope: f64,
    pub thresholds: CertificateThresholds,
    pub signs_ok: bool,
    pub envelope_ok: bool,
    pub mesh_ok: bool,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.signs_ok && self.envelope_ok && self.mesh_ok
    }
}

pub fn existence_certificate(
    params: &ModelParams,
    b1: f64,
    b2: f64,
    n: usize,
    thresholds: CertificateThresholds,
) -> Result<Certificate> {
    params.validate()?;
    if !(b1 >= 0.0 && b1 > params.a && b2 > b1) {
        return Err(Error::invalid(
            "b2",
            format!("need max(0, a) ≤ b1 < b2, got [{b1}, {b2}]"),
        ));
    }
    let f_b1 = f_n(params, b1, n)?;
    let f_b2 = f_n(params, b2, n)?;
    let grid = 64;
    let (c11_hat, h0_hat) = (0..=grid)
        .map(|i| constants(params, b1 + (b2 - b1) * i as f64 / grid as f64))
        .fold((0.0f64, f64::INFINITY), |(c, h), k| (c.max(k.c11), h.min(k.h0)));
    let len = b2 - params.a;
    let c12_hat = c11_hat * len.sqrt();
    let n0_hat = len / h0_hat;
    let envelope = c12_hat / (n as f64).sqrt();
    Ok(Certificate {
        b1,
        b2,
        n,
        f_b1,
        f_b2,
        c11_hat,
        h0_hat,
        c12_hat,
        n0_hat,
        envelope,
        thresholds,
        signs_ok: f_b1 <= thresholds.lower && f_b2 >= thresholds.upper,
        envelope_ok: envelope < thresholds.envelope,
        mesh_ok: n as f64 >= n0_hat,
    })
}

//! Linear solvers for the assembled system.
//!
//! * dense LU with partial pivoting,
//! * banded LU with partial pivoting (upper band grows to `2w`),
//! * restarted GMRES, right-preconditioned by the tridiagonal part and using
//!   an FFT product for the Toeplitz convolution block, wrapped in
//!   residual-based iterative refinement.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::system::FemSystem;

/// Which factorisation to use. `Auto` picks banded or dense LU for small
/// systems and the Krylov path otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    #[default]
    Auto,
    Dense,
    Banded,
    Krylov,
}

/// Largest system handed to a direct factorisation under `Auto`.
pub const AUTO_DIRECT_LIMIT: usize = 1024;

impl SolverKind {
    pub(crate) fn resolve(self, sys: &FemSystem) -> SolverKind {
        match self {
            SolverKind::Auto => {
                let n = sys.mesh().elements();
                let m = sys.dim();
                let reach = (sys.params().jmax / sys.mesh().h()).ceil() as usize + 1;
                if m > AUTO_DIRECT_LIMIT {
                    SolverKind::Krylov
                } else if sys.params().lambda == 0.0 || 4 * reach < n {
                    SolverKind::Banded
                } else {
                    SolverKind::Dense
                }
            }
            k => k,
        }
    }
}

/// Failure of a factorisation or of the iterative solver.
#[derive(Debug, Clone)]
pub(crate) struct SolveFailure(pub String);

#[derive(Debug, Clone, Copy)]
pub(crate) struct SolveStats {
    pub kind: SolverKind,
    pub iterations: usize,
}

pub(crate) fn solve_system(
    sys: &FemSystem,
    kind: SolverKind,
) -> Result<(Vec<f64>, SolveStats), SolveFailure> {
    let kind = kind.resolve(sys);
    let (x, iterations) = match kind {
        SolverKind::Dense => {
            let lu = DenseLu::factor(sys.to_dense(), sys.dim())?;
            refine(sys, |r| lu.solve(r))
        }
        SolverKind::Banded => {
            let lu = BandedLu::from_system(sys)?;
            refine(sys, |r| lu.solve(r))
        }
        SolverKind::Krylov => krylov_solve(sys)?,
        SolverKind::Auto => unreachable!("resolved above"),
    };
    Ok((x, SolveStats { kind, iterations }))
}

/// Direct solve followed by up to three steps of iterative refinement,
/// kept while they reduce the residual.
fn refine(sys: &FemSystem, solve: impl Fn(&[f64]) -> Vec<f64>) -> (Vec<f64>, usize) {
    let b = sys.load();
    let mut x = solve(b);
    let residual = |x: &[f64]| -> Vec<f64> { sys.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };
    let mut r = residual(&x);
    let mut steps = 0;
    for _ in 0..3 {
        let d = solve(&r);
        let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + di).collect();
        let r_trial = residual(&trial);
        if max_abs(&r_trial) >= max_abs(&r) {
            break;
        }
        x = trial;
        r = r_trial;
        steps += 1;
    }
    (x, steps)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

fn singular_pivot(k: usize, pivot: f64, scale: f64) -> SolveFailure {
    SolveFailure(format!(
        "pivot {k} has magnitude {pivot:.3e} relative to matrix scale {scale:.3e}"
    ))
}

/// Row-major dense LU with partial pivoting.
pub(crate) struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub(crate) fn factor(mut a: Vec<f64>, n: usize) -> Result<Self, SolveFailure> {
        assert_eq!(a.len(), n * n);
        let scale = max_abs(&a);
        let tiny = scale * f64::EPSILON * n as f64;
        let mut perm = vec![0; n];
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > tiny) {
                return Err(singular_pivot(k, pmax, scale));
            }
            perm[k] = p;
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
            }
            let (head, tail) = a.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let pivot = pivot_row[k];
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] / pivot;
                row[k] = l;
                if l != 0.0 {
                    for (r, u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *r -= l * u;
                    }
                }
            }
        }
        Ok(DenseLu { n, lu: a, perm })
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.perm[k]);
        }
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, y)| u * y).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

/// Banded LU with partial pivoting for half-bandwidth `w`. Row `i` stores
/// columns `i - w ..= i + 2w`; the multipliers are kept apart and applied
/// in elimination order during the solve.
pub(crate) struct BandedLu {
    n: usize,
    w: usize,
    rows: Vec<f64>,
    mult: Vec<f64>,
    perm: Vec<usize>,
}

impl BandedLu {
    fn width(w: usize) -> usize {
        3 * w + 1
    }

    fn idx(&self, i: usize, j: usize) -> usize {
        i * Self::width(self.w) + (j + self.w - i)
    }

    pub(crate) fn from_system(sys: &FemSystem) -> Result<Self, SolveFailure> {
        let n = sys.dim();
        let w = sys.bandwidth().min(n.saturating_sub(1)).max(1);
        Self::factor(n, w, |i, j| sys.entry(i, j))
    }

    pub(crate) fn tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self, SolveFailure> {
        Self::factor(diag.len(), 1, |i, j| {
            if i == j {
                diag[i]
            } else if j + 1 == i {
                lower[i]
            } else {
                upper[i]
            }
        })
    }

    fn factor(n: usize, w: usize, entry: impl Fn(usize, usize) -> f64) -> Result<Self, SolveFailure> {
        let width = Self::width(w);
        let mut lu = BandedLu {
            n,
            w,
            rows: vec![0.0; n * width],
            mult: vec![0.0; n * w],
            perm: vec![0; n],
        };
        let mut scale = 0.0f64;
        for i in 0..n {
            for j in i.saturating_sub(w)..(i + w + 1).min(n) {
                let v = entry(i, j);
                scale = scale.max(v.abs());
                let k = lu.idx(i, j);
                lu.rows[k] = v;
            }
        }
        let tiny = scale * f64::EPSILON * n as f64;
        for k in 0..n {
            let last = (k + w).min(n - 1);
            let (p, pmax) = (k..=last)
                .map(|i| (i, lu.rows[lu.idx(i, k)].abs()))
                .fold((k, -1.0), |best, c| if c.1 > best.1 { c } else { best });
            if !(pmax > tiny) {
                return Err(singular_pivot(k, pmax, scale));
            }
            lu.perm[k] = p;
            let jend = (k + 2 * w).min(n - 1);
            if p != k {
                for j in k..=jend {
                    let (ik, ip) = (lu.idx(k, j), lu.idx(p, j));
                    lu.rows.swap(ik, ip);
                }
            }
            let pivot = lu.rows[lu.idx(k, k)];
            for i in k + 1..=last {
                let l = lu.rows[lu.idx(i, k)] / pivot;
                lu.mult[k * w + (i - k - 1)] = l;
                let ik = lu.idx(i, k);
                lu.rows[ik] = 0.0;
                if l != 0.0 {
                    let src = lu.idx(k, k + 1);
                    let dst = lu.idx(i, k + 1);
                    let cnt = jend - k;
                    for t in 0..cnt {
                        let u = lu.rows[src + t];
                        lu.rows[dst + t] -= l * u;
                    }
                }
            }
        }
        Ok(lu)
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        let (n, w) = (self.n, self.w);
        for k in 0..n {
            x.swap(k, self.perm[k]);
            let xk = x[k];
            if xk != 0.0 {
                for i in k + 1..=(k + w).min(n - 1) {
                    x[i] -= self.mult[k * w + (i - k - 1)] * xk;
                }
            }
        }
        for i in (0..n).rev() {
            let jend = (i + 2 * w).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=jend {
                s -= self.rows[self.idx(i, j)] * x[j];
            }
            x[i] = s / self.rows[self.idx(i, i)];
        }
    }
}

/// `y_i = Σ_j c(|i - j|) x_j` for a symmetric Toeplitz matrix given by its
/// first row `c(0..len)`.
pub(crate) struct ToeplitzProduct {
    n: usize,
    kernel: Vec<f64>,
    fft: Option<FftPlan>,
}

struct FftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    symbol: Vec<Complex64>,
}

const FFT_MIN_KERNEL: usize = 48;

impl ToeplitzProduct {
    pub(crate) fn new(n: usize, kernel: &[f64]) -> Self {
        let kernel = kernel[..kernel.len().min(n)].to_vec();
        let fft = (kernel.len() > FFT_MIN_KERNEL).then(|| {
            let len = (n + kernel.len()).next_power_of_two();
            let mut planner = FftPlanner::new();
            let forward = planner.plan_fft_forward(len);
            let inverse = planner.plan_fft_inverse(len);
            let mut symbol = vec![Complex64::new(0.0, 0.0); len];
            for (k, &c) in kernel.iter().enumerate() {
                symbol[k].re = c;
                if k > 0 {
                    symbol[len - k].re = c;
                }
            }
            forward.process(&mut symbol);
            FftPlan {
                len,
                forward,
                inverse,
                symbol,
            }
        });
        ToeplitzProduct { n, kernel, fft }
    }

    pub(crate) fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        match &self.fft {
            Some(plan) => {
                let mut buf = vec![Complex64::new(0.0, 0.0); plan.len];
                for (b, &v) in buf.iter_mut().zip(x) {
                    b.re = v;
                }
                plan.forward.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(&plan.symbol) {
                    *b *= s;
                }
                plan.inverse.process(&mut buf);
                let scale = 1.0 / plan.len as f64;
                for (o, b) in out.iter_mut().zip(&buf[..n]) {
                    *o = b.re * scale;
                }
            }
            None => {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (k, &c) in self.kernel.iter().enumerate() {
                        if k == 0 {
                            acc += c * x[i];
                            continue;
                        }
                        if i >= k {
                            acc += c * x[i - k];
                        }
                        if i + k < n {
                            acc += c * x[i + k];
                        }
                    }
                    out[i] = acc;
                }
            }
        }
    }
}

/// Matrix-free operator `A = T - λ C_off`, where `T` is the exact tridiagonal
/// part and `C_off` the convolution block with its three central diagonals
/// removed.
struct StructuredOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    lambda: f64,
    off: Option<ToeplitzProduct>,
}

impl StructuredOperator {
    fn new(sys: &FemSystem) -> Self {
        let (lower, diag, upper) = sys.tridiagonal();
        let mut kernel = sys.kernel().to_vec();
        for c in kernel.iter_mut().take(2) {
            *c = 0.0;
        }
        let off = (kernel.len() > 2 && sys.params().lambda != 0.0)
            .then(|| ToeplitzProduct::new(sys.dim(), &kernel));
        StructuredOperator {
            lower,
            diag,
            upper,
            lambda: sys.params().lambda,
            off,
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        if let Some(off) = &self.off {
            off.apply(x, out);
            for o in out.iter_mut() {
                *o *= -self.lambda;
            }
        } else {
            out.fill(0.0);
        }
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.upper[i] * x[i + 1];
            }
            out[i] += acc;
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Right-preconditioned restarted GMRES for `A d = r`, returning `d` and the
/// number of inner iterations. Stops once `‖r - A d‖₂ ≤ rtol ‖r‖₂`.
fn gmres(
    op: &StructuredOperator,
    precond: &BandedLu,
    rhs: &[f64],
    rtol: f64,
    atol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let target = (rtol * norm2(rhs)).max(atol);
    let mut total = 0;
    let mut r = rhs.to_vec();
    let mut work = vec![0.0; n];
    let mut last_beta = f64::INFINITY;
    while total < max_iter {
        let beta = norm2(&r);
        // a restart cycle that does not halve the true residual has hit the
        // rounding floor
        if beta <= target || beta == 0.0 || beta > 0.5 * last_beta {
            break;
        }
        last_beta = beta;
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut cs: Vec<(f64, f64)> = Vec::with_capacity(restart);
        let mut g = vec![beta];
        for j in 0..restart {
            let mut z = basis[j].clone();
            precond.solve_in_place(&mut z);
            op.apply(&z, &mut work);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij: f64 = work.iter().zip(v).map(|(a, b)| a * b).sum();
                col[i] = hij;
                for (wk, vk) in work.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hnext = norm2(&work);
            col[j + 1] = hnext;
            for (i, &(c, s)) in cs.iter().enumerate() {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = c * a + s * b;
                col[i + 1] = -s * a + c * b;
            }
            let (a, b) = (col[j], col[j + 1]);
            let rho = a.hypot(b);
            let (c, s) = if rho == 0.0 {
                (1.0, 0.0)
            } else {
                (a / rho, b / rho)
            };
            col[j] = rho;
            col[j + 1] = 0.0;
            cs.push((c, s));
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s * gj);
            hess.push(col);
            zs.push(z);
            total += 1;
            if hnext == 0.0 || g[j + 1].abs() <= target || total >= max_iter {
                break;
            }
            basis.push(work.iter().map(|v| v / hnext).collect());
        }
        let k = hess.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (jj, yj) in y.iter().enumerate().take(k).skip(i + 1) {
                s -= hess[jj][i] * yj;
            }
            y[i] = s / hess[i][i];
        }
        for (yi, z) in y.iter().zip(&zs) {
            for (xk, zk) in x.iter_mut().zip(z) {
                *xk += yi * zk;
            }
        }
        op.apply(&x, &mut work);
        for i in 0..n {
            r[i] = rhs[i] - work[i];
        }
    }
    (x, total)
}

/// Normwise backward error below which refinement stops.
const BACKWARD_TARGET: f64 = 8.0 * f64::EPSILON;
/// Largest backward error still accepted as a solution.
const BACKWARD_ACCEPT: f64 = 1e-12;

fn krylov_solve(sys: &FemSystem) -> Result<(Vec<f64>, usize), SolveFailure> {
    let n = sys.dim();
    let b = sys.load();
    let op = StructuredOperator::new(sys);
    let precond = BandedLu::tridiagonal(&op.lower, &op.diag, &op.upper)?;
    let norm_a = sys.norm_inf();
    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut r = b.to_vec();
    let mut iterations = 0;
    let mut eta = f64::INFINITY;
    // rounding floor of ‖b - A x‖₂ for |x| of the size of the
    // preconditioned solution
    let mut scale = b.to_vec();
    precond.solve_in_place(&mut scale);
    let atol = 4.0 * f64::EPSILON * (n as f64).sqrt() * (norm_a * max_abs(&scale) + max_abs(b));
    for _ in 0..6 {
        let denom = norm_a * max_abs(&x) + max_abs(b);
        eta = if denom == 0.0 { 0.0 } else { max_abs(&r) / denom };
        if eta <= BACKWARD_TARGET {
            break;
        }
        let (d, it) = gmres(&op, &precond, &r, 1e-10, atol, 120, 2000);
        iterations += it;
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        op.apply(&x, &mut ax);
        let prev = max_abs(&r);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let denom = norm_a * max_abs(&x) + max_abs(b);
        let next = if denom == 0.0 { 0.0 } else { max_abs(&r) / denom };
        if max_abs(&r) >= prev {
            eta = next;
            break;
        }
        eta = next;
    }
    if !(eta <= BACKWARD_ACCEPT) {
        return Err(SolveFailure(format!(
            "GMRES stagnated at backward error {eta:.3e} after {iterations} iterations"
        )));
    }
    Ok((x, iterations))
}

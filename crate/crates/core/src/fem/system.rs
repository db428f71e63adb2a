//! Galerkin assembly of `A(v, ϕ) = (f, ϕ)` on the interior hat functions.
//!
//! The system matrix has entries `A(ϕ_i, ϕ_j)` (row `j` = test function) and
//! splits as
//!
//! ```text
//!   A = L + λ M - λ C
//! ```
//!
//! with `L = ½σ² S + D` tridiagonal (stiffness plus drift `∫ μ x ϕ_i' ϕ_j`),
//! `M` the mass matrix and `C_ij = ∫∫ φ(x - y) ϕ_i(y) ϕ_j(x) dy dx`. On a
//! uniform mesh `C` is a symmetric Toeplitz matrix whose symbol is
//! `c(k) = h² ∫ φ(h(k + t)) B(t) dt`, `B` being the autocorrelation of the
//! unit hat (the centred cubic B-spline). Only the symbol is stored, so the
//! memory footprint stays linear in `N`.

use rayon::prelude::*;

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{gl10, integrate};

/// Assembled discrete problem.
#[derive(Debug, Clone)]
pub struct FemSystem {
    mesh: Mesh,
    params: ModelParams,
    l_lower: Vec<f64>,
    l_diag: Vec<f64>,
    l_upper: Vec<f64>,
    kernel: Vec<f64>,
    load: Vec<f64>,
}

/// Cubic B-spline `Λ ⋆ Λ` for the unit hat `Λ` on `[-1, 1]`.
fn hat_autocorrelation(t: f64) -> f64 {
    let t = t.abs();
    if t <= 1.0 {
        2.0 / 3.0 - t * t + 0.5 * t * t * t
    } else if t < 2.0 {
        let s = 2.0 - t;
        s * s * s / 6.0
    } else {
        0.0
    }
}

/// `c(k)` for element size `h`: composite 10-point Gauss-Legendre on the four
/// polynomial pieces of `B`, split at the support cut-offs `h(k + t) = ±J`
/// and refined so that no panel exceeds `γ/4` in `y`.
fn kernel_entry(params: &ModelParams, h: f64, k: usize) -> f64 {
    let d = params.density();
    let rule = gl10();
    let jt = params.jmax / h;
    let kf = k as f64;
    let mut acc = 0.0;
    for lo in [-2.0, -1.0, 0.0, 1.0] {
        let hi = lo + 1.0;
        let mut cuts = [lo, hi, hi, hi];
        let mut m = 2;
        for c in [-jt - kf, jt - kf] {
            if c > lo && c < hi {
                cuts[m] = c;
                m += 1;
            }
        }
        cuts[..m].sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in cuts[..m].windows(2) {
            let (p, q) = (w[0], w[1]);
            if q <= p {
                continue;
            }
            let panels = ((q - p) * h / (0.25 * params.gamma)).ceil().max(1.0) as usize;
            let step = (q - p) / panels as f64;
            for i in 0..panels {
                let s0 = p + step * i as f64;
                let s1 = if i + 1 == panels { q } else { s0 + step };
                acc += integrate(rule, s0, s1, |t| d.density(h * (kf + t)) * hat_autocorrelation(t));
            }
        }
    }
    h * h * acc
}

/// Number of nonzero Toeplitz diagonals `c(0..len)` for `n` unknowns.
fn kernel_len(params: &ModelParams, h: f64, n: usize) -> usize {
    let reach = (params.jmax / h).ceil() as usize + 2;
    reach.min(n)
}

impl FemSystem {
    pub(crate) fn build(params: &ModelParams, b: f64, n: usize) -> Result<Self> {
        params.validate()?;
        if !(b > params.a) {
            return Err(Error::invalid("b", format!("need b > a = {}, got {b}", params.a)));
        }
        let mesh = Mesh::uniform(params.a, b, n)?;
        let h = mesh.h();
        let x = mesh.nodes();
        let m = mesh.interior();
        let mu = params.mu;
        let diff = 0.5 * params.sigma * params.sigma;

        let mut l_lower = vec![0.0; m];
        let mut l_diag = vec![0.0; m];
        let mut l_upper = vec![0.0; m];
        let mut load = vec![0.0; m];
        for r in 0..m {
            let j = r + 1;
            // ½σ² ∫ϕ_i'ϕ_j' plus μ ∫ x ϕ_i' ϕ_j, exact for linear x
            l_diag[r] = 2.0 * diff / h - mu * (x[j + 1] - x[j - 1]) / 6.0;
            if r > 0 {
                l_lower[r] = -diff / h - mu * (x[j - 1] + 2.0 * x[j]) / 6.0;
            }
            if r + 1 < m {
                l_upper[r] = -diff / h + mu * (2.0 * x[j] + x[j + 1]) / 6.0;
            }
            // (-μx, ϕ_j)
            load[r] = -mu * h * (x[j - 1] + 4.0 * x[j] + x[j + 1]) / 6.0;
        }

        let kernel = if params.lambda == 0.0 {
            Vec::new()
        } else {
            (0..kernel_len(params, h, m))
                .into_par_iter()
                .map(|k| kernel_entry(params, h, k))
                .collect()
        };

        Ok(FemSystem {
            mesh,
            params: *params,
            l_lower,
            l_diag,
            l_upper,
            kernel,
            load,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Number of unknowns `N - 1`.
    pub fn dim(&self) -> usize {
        self.load.len()
    }

    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// Replaces the right-hand side, e.g. to solve with a different forcing.
    pub fn set_load(&mut self, load: Vec<f64>) -> Result<()> {
        if load.len() != self.dim() {
            return Err(Error::invalid(
                "load",
                format!("expected {} entries, got {}", self.dim(), load.len()),
            ));
        }
        self.load = load;
        Ok(())
    }

    /// Toeplitz symbol `c(k)` of the convolution part (without the factor λ).
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// Half-bandwidth of the assembled matrix.
    pub fn bandwidth(&self) -> usize {
        self.kernel.len().saturating_sub(1).max(1)
    }

    fn kernel_at(&self, k: usize) -> f64 {
        self.kernel.get(k).copied().unwrap_or(0.0)
    }

    /// Entry of the tridiagonal `½σ² S + D` part.
    pub fn l_part_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.l_diag[i]
        } else if j + 1 == i {
            self.l_lower[i]
        } else if i + 1 == j {
            self.l_upper[i]
        } else {
            0.0
        }
    }

    /// Entry of `λ M`.
    pub fn mass_part_entry(&self, i: usize, j: usize) -> f64 {
        let h = self.mesh.h();
        let lam = self.params.lambda;
        if i == j {
            lam * 2.0 * h / 3.0
        } else if i.abs_diff(j) == 1 {
            lam * h / 6.0
        } else {
            0.0
        }
    }

    /// Entry of `λ C`.
    pub fn convolution_part_entry(&self, i: usize, j: usize) -> f64 {
        self.params.lambda * self.kernel_at(i.abs_diff(j))
    }

    /// `A(ϕ_j, ϕ_i)`: row `i` is tested against `ϕ_i`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.l_part_entry(i, j) + self.mass_part_entry(i, j) - self.convolution_part_entry(i, j)
    }

    /// Dense row-major copy of the matrix.
    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.dim();
        let mut out = vec![0.0; m * m];
        let lam = self.params.lambda;
        for i in 0..m {
            let row = &mut out[i * m..(i + 1) * m];
            let lo = i.saturating_sub(self.kernel.len().saturating_sub(1));
            let hi = (i + self.kernel.len()).min(m);
            for (j, slot) in row.iter_mut().enumerate().take(hi).skip(lo) {
                *slot = -lam * self.kernel[i.abs_diff(j)];
            }
            for j in i.saturating_sub(1)..(i + 2).min(m) {
                row[j] += self.l_part_entry(i, j) + self.mass_part_entry(i, j);
            }
        }
        out
    }

    /// Sub-, main and super-diagonal of the full matrix.
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.dim();
        let h = self.mesh.h();
        let lam = self.params.lambda;
        let c0 = self.kernel_at(0);
        let c1 = self.kernel_at(1);
        let diag = (0..m)
            .map(|i| self.l_diag[i] + lam * (2.0 * h / 3.0 - c0))
            .collect();
        let off = lam * (h / 6.0 - c1);
        let lower = (0..m)
            .map(|i| if i > 0 { self.l_lower[i] + off } else { 0.0 })
            .collect();
        let upper = (0..m)
            .map(|i| if i + 1 < m { self.l_upper[i] + off } else { 0.0 })
            .collect();
        (lower, diag, upper)
    }

    /// `y = A x` by direct summation over the band.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.dim();
        assert_eq!(x.len(), m);
        let lam = self.params.lambda;
        let (lower, diag, upper) = self.tridiagonal();
        (0..m)
            .map(|i| {
                let mut acc = diag[i] * x[i];
                if i > 0 {
                    acc += lower[i] * x[i - 1];
                }
                if i + 1 < m {
                    acc += upper[i] * x[i + 1];
                }
                for k in 2..self.kernel.len() {
                    let c = lam * self.kernel[k];
                    if i >= k {
                        acc -= c * x[i - k];
                    }
                    if i + k < m {
                        acc -= c * x[i + k];
                    }
                }
                acc
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let (lower, diag, upper) = self.tridiagonal();
        let lam = self.params.lambda;
        let tail: f64 = self.kernel.iter().skip(2).map(|c| 2.0 * lam * c.abs()).sum();
        (0..self.dim())
            .map(|i| lower[i].abs() + diag[i].abs() + upper[i].abs())
            .fold(0.0, f64::max)
            + tail
    }
}

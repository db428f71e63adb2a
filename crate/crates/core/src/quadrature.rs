//! Gauss-Legendre rules used by the assembly.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Ten-point rule, cached.
pub fn gl10() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(10))
}

/// Four-point rule, cached.
pub fn gl4() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(4))
}

/// Integrates `f` over `[lo, hi]` with the given rule.
pub fn integrate(rule: &(Vec<f64>, Vec<f64>), lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials_exactly() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            // degree 2n-1 monomial moments
            for d in 0..(2 * n) {
                let got: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(d as i32)).sum();
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                assert!((got - exact).abs() < 1e-13, "n={n} d={d} got={got}");
            }
        }
    }
}

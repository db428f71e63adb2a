use pairstop::boundary::{
    bracket_root_with, convergence_study_with, existence_certificate, BoundaryOptions, CertificateThresholds,
};
use pairstop::fem::{solve_problem, solve_with, SolverKind};
use pairstop::verify::{check_condition_a_with, ode_free_boundary, Integrand};
use pairstop::*;

fn reference() -> ModelParams {
    ModelParams::reference()
}

#[test]
fn zero_load_gives_zero_solution() {
    let mut sys = assemble(&reference(), 0.0573, 300).unwrap();
    sys.set_load(vec![0.0; sys.dim()]).unwrap();
    let sol = solve(&sys).unwrap();
    assert!(sol.coeffs().iter().all(|&c| c == 0.0));
    assert_eq!(sol.derivative_at_b(), 0.0);
    let c = check_condition_b(&sol);
    assert!(c.holds);
    assert_eq!(c.min_v, 0.0);
    assert_eq!(sys.set_load(vec![0.0; 3]).unwrap_err().field(), Some("load"));
}

#[test]
fn assembly_rejects_bad_inputs() {
    let p = reference();
    assert_eq!(assemble(&p, 0.05, 1).unwrap_err().field(), Some("n"));
    assert_eq!(assemble(&p, -0.1, 10).unwrap_err().field(), Some("b"));
    assert_eq!(assemble(&p, -0.2, 10).unwrap_err().field(), Some("b"));
    let bad = ModelParams { sigma: 0.0, ..p };
    assert_eq!(assemble(&bad, 0.05, 10).unwrap_err().field(), Some("sigma"));
}

#[test]
fn solvers_agree_across_paths() {
    let p = reference();
    let sys = assemble(&p, 0.0573, 1500).unwrap();
    let k = solve_with(&sys, SolverKind::Krylov).unwrap();
    let d = solve_with(&sys, SolverKind::Dense).unwrap();
    let b = solve_with(&sys, SolverKind::Banded).unwrap();
    for ((x, y), z) in k.coeffs().iter().zip(d.coeffs()).zip(b.coeffs()) {
        assert!((x - y).abs() < 1e-13 && (x - z).abs() < 1e-13, "{x} {y} {z}");
    }
}

#[test]
fn residual_post_conditions() {
    let p = reference();
    for n in [200, 500, 1000] {
        let d = *solve_problem(&p, 0.0573, n).unwrap().diagnostics();
        assert!(d.residual_max <= 1e-10 * d.load_max, "N = {n}: {d:?}");
    }
    // only the absolute bound survives rounding on fine meshes
    let d = *solve_problem(&p, 0.0573, 8000).unwrap().diagnostics();
    assert!(d.residual_max <= 1e-10, "{d:?}");
    assert!(d.h_over_h0() > 1.0);
}

#[test]
fn reference_solution_shape() {
    let p = reference();
    let sol = solve_problem(&p, 0.0573, 2000).unwrap();
    let (vmax, xmax) = sol.max_value();
    assert!((0.03..0.045).contains(&vmax), "max {vmax} at {xmax}");
    assert!(xmax < 0.0);
    // 0.0573 lies just above b_N, so the last interior node dips below zero
    // by h F_N(b)
    let slack = sol.mesh().h() * sol.derivative_at_b().abs();
    assert!(sol.min_value() >= -slack - 1e-15);
    let at_root = find_boundary(&p, 2000, 1e-10).unwrap();
    assert!(at_root.solution.min_value() >= -1e-12);
}

#[test]
fn interpolant_evaluation_conventions() {
    let sol = solve_problem(&reference(), 0.0573, 100).unwrap();
    let nodes = sol.mesh().nodes();
    assert_eq!(eval(&sol, -0.1), 0.0);
    assert_eq!(eval(&sol, 0.0573), 0.0);
    assert_eq!(eval(&sol, 0.2), 0.0);
    assert_eq!(eval(&sol, -0.3), 0.0);
    for (x, c) in nodes.iter().zip(sol.coeffs()) {
        assert_eq!(eval(&sol, *x), *c);
    }
    assert_eq!(value_function(&sol, -0.1), -0.1);
    assert_eq!(value_function(&sol, 0.0573), 0.0573);
    assert_eq!(value_function(&sol, 0.3), 0.3);
    let x = 0.5 * (nodes[10] + nodes[11]);
    assert_eq!(value_function(&sol, x), eval(&sol, x) + x);
}

#[test]
fn derivative_at_b_examples() {
    let p = reference();
    let f = f_n(&p, 0.1, 2000).unwrap();
    assert!((f - 1.9).abs() <= 0.3, "F_N(0.1) = {f}");
    let f = f_n(&p, 0.0573, 2000).unwrap();
    assert!(f.abs() < 0.05, "F_N(0.0573) = {f}");
    let sol = solve_problem(&p, 0.03, 500).unwrap();
    let c = sol.coeffs();
    assert!(c[499] > 0.0);
    assert!(derivative_at_b(&sol) < 0.0);
}

#[test]
fn f_n_negative_for_nonpositive_b() {
    let p = reference();
    for k in 1..=10 {
        let b = p.a * (1.0 - k as f64 / 10.0);
        assert!(f_n(&p, b, 400).unwrap() < 0.0, "b = {b}");
    }
}

#[test]
fn f_n_has_a_single_sign_change() {
    let p = reference();
    let (lo, hi) = bracket_root(&p, 500, 0.01, 1.5).unwrap();
    let (lo, hi) = (lo * 0.5, hi * 1.5);
    let signs: Vec<bool> = (0..100)
        .map(|i| f_n(&p, lo + (hi - lo) * i as f64 / 99.0, 500).unwrap() > 0.0)
        .collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(changes, 1);
}

#[test]
fn bracketing_up_and_down() {
    let p = reference();
    let (lo, hi) = bracket_root(&p, 2000, 0.01, 1.5).unwrap();
    assert!((0.0..0.0573).contains(&lo) && 0.0573 < hi, "({lo}, {hi})");
    let opts = BoundaryOptions {
        b_init: Some(0.2),
        ..BoundaryOptions::default()
    };
    let br = bracket_root_with(&p, 1000, &opts).unwrap();
    assert!(br.f_lo < 0.0 && br.f_hi >= 0.0);
    assert!(br.lo < 0.0573 && 0.0573 < br.hi);
    assert!(br.samples.len() >= 2);
}

#[test]
fn bracketing_fails_with_samples() {
    let p = reference();
    let opts = BoundaryOptions {
        b_init: Some(0.001),
        growth: 1.01,
        max_expansions: 3,
        ..BoundaryOptions::default()
    };
    match bracket_root_with(&p, 200, &opts) {
        Err(Error::NoSignChange { samples }) => assert_eq!(samples.len(), 4),
        other => panic!("expected no sign change, got {other:?}"),
    }
    assert_eq!(
        bracket_root(&p, 200, 0.01, 1.0).unwrap_err().field(),
        Some("growth")
    );
    assert_eq!(
        bracket_root(&p, 200, -0.01, 1.5).unwrap_err().field(),
        Some("b_init")
    );
}

#[test]
fn jump_free_bracket_contains_oracle_root() {
    let p = reference().with_lambda(0.0);
    let root = ode_free_boundary(&p, 0.01, 0.1, 1e-9).unwrap();
    let (lo, hi) = bracket_root(&p, 2000, 0.01, 1.5).unwrap();
    assert!(lo < root && root < hi);
    let fem = find_boundary(&p, 4000, 1e-7).unwrap();
    assert!((fem.b_n - root).abs() < 1e-4);
}

#[test]
fn free_boundary_at_two_thousand_elements() {
    let p = reference();
    let tol = 1e-6;
    let r = find_boundary(&p, 2000, tol).unwrap();
    assert!((r.b_n - 0.0572939).abs() <= 5e-4);
    assert!(r.b_n > 0.0);
    assert!(r.f_lo < 0.0 && 0.0 < r.f_hi);
    assert!(r.bracket.1 - r.bracket.0 <= 2.0 * tol);
    assert!(r.bracket.0 < r.b_n && r.b_n < r.bracket.1);
    assert_eq!(r.n, 2000);
    // |F_N(b_N)| is bounded by the slope times the final half-width
    let slope = (r.f_hi - r.f_lo) / (r.bracket.1 - r.bracket.0);
    assert!(r.f_at_root.abs() <= slope * tol * 2.0);
    assert!(find_boundary(&p, 2000, 0.0).unwrap_err().field() == Some("tol_b"));
}

#[test]
fn convergence_study_rows() {
    let p = reference();
    let report = convergence_study(&p, &[500, 1000, 2000], 1e-9).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.rows[0].delta.is_none());
    let d1 = report.rows[1].delta.unwrap().abs();
    let d2 = report.rows[2].delta.unwrap().abs();
    assert!(d1 > d2);
    assert!(report.deltas_shrinking);
    let single = convergence_study(&p, &[300], 1e-6).unwrap();
    assert_eq!(single.rows.len(), 1);
    assert!(single.rows[0].delta.is_none());
    assert_eq!(convergence_study(&p, &[], 1e-6).unwrap_err().field(), Some("ns"));
    assert_eq!(
        convergence_study(&p, &[500, 500], 1e-6).unwrap_err().field(),
        Some("ns")
    );
    let opts = BoundaryOptions::default();
    assert!(convergence_study_with(&p, &[400, 300], 1e-6, &opts).is_err());
}

#[test]
fn boundary_differences_within_square_root_envelope() {
    let p = reference();
    let ns = [250, 500, 1000, 2000];
    let report = convergence_study(&p, &ns, 1e-10).unwrap();
    let deltas: Vec<(f64, f64)> = report
        .rows
        .iter()
        .filter_map(|r| r.delta.map(|d| (r.n as f64 / 2.0, d.abs())))
        .collect();
    let c = deltas[0].1 * deltas[0].0.sqrt();
    for (n, d) in deltas {
        assert!(d <= c / n.sqrt() * (1.0 + 1e-12), "n = {n}");
    }
}

#[test]
fn existence_certificate_reports_each_check() {
    let p = reference();
    let cert = existence_certificate(&p, 0.0, 0.1, 2000, CertificateThresholds::default()).unwrap();
    assert!(cert.f_b1 <= -0.5 && cert.f_b2 >= 0.5);
    assert!(cert.signs_ok);
    // the explicit constants are far too pessimistic for a practical mesh
    assert!(!cert.mesh_ok && !cert.envelope_ok);
    assert!(!cert.holds());
    let loose = CertificateThresholds {
        lower: -0.1,
        upper: 0.1,
        envelope: f64::INFINITY,
    };
    let cert = existence_certificate(&p, 0.0, 0.1, 2000, loose).unwrap();
    assert!(cert.signs_ok && cert.envelope_ok);
}

#[test]
fn generator_inequality_checks() {
    let p = reference();
    let r = find_boundary(&p, 1000, 1e-8).unwrap();
    let report = check_condition_a(&r.solution, p.lambda, &p.density(), 512);
    assert!(report.holds);
    assert_eq!(report.curve.len(), 512);
    assert!(report
        .curve
        .iter()
        .all(|s| s.x > r.b_n && s.x <= r.b_n + p.jmax + 1e-15));
    assert_eq!(report.holds, report.worst_margin >= 0.0);
    // beyond b + J the integral vanishes
    assert_eq!(
        p.density()
            .convolve(r.solution.as_piecewise(), r.b_n + p.jmax + 1e-9),
        0.0
    );
    // without jumps the left side is identically zero
    let none = check_condition_a(&r.solution, 0.0, &p.density(), 64);
    assert!(none.holds && none.curve.iter().all(|s| s.lhs == 0.0));
    // the integrand u = v + x violates the inequality at λ = 30
    let p30 = p.with_lambda(30.0);
    let r30 = find_boundary(&p30, 1000, 1e-8).unwrap();
    let u = check_condition_a_with(&r30.solution, 30.0, &p30.density(), 512, Integrand::Value);
    assert!(!u.holds);
    assert!(u.worst_x - r30.b_n < 0.01);
}

#[test]
fn sign_flipped_load_breaks_nonnegativity() {
    let p = reference();
    let mut sys = assemble(&p, 0.0573, 500).unwrap();
    let flipped: Vec<f64> = sys.load().iter().map(|f| -f).collect();
    sys.set_load(flipped).unwrap();
    let c = check_condition_b(&solve(&sys).unwrap());
    assert!(!c.holds && c.min_v < 0.0);
}

#[test]
fn monte_carlo_without_jumps_matches_fem() {
    let p = reference().with_lambda(0.0);
    let b = 0.0573;
    let sol = solve_problem(&p, b, 2000).unwrap();
    let est = simulate_stopped_value(&p, b, 0.0, 200_000, None, 17).unwrap();
    let u = sol.value_function(0.0);
    assert!(
        (est.mean - u).abs() <= 3.0 * est.std_err + est.bias_allowance,
        "{est:?} vs {u}"
    );
    // no jumps: every path stops exactly at a barrier crossing of the grid
    assert!(est.min_stopped >= p.a - 0.01 && est.max_stopped <= b + 0.01);
}

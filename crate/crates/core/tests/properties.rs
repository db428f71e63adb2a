use pairstop::fem::Mesh;
use pairstop::model::PiecewiseLinear;
use pairstop::verify::{ou_transition, simulate_with, McOptions};
use pairstop::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (
        2.0..16.0f64,
        0.1..0.4f64,
        0.0..30.0f64,
        -0.2..-0.05f64,
        0.005..0.03f64,
        1.2..4.0f64,
    )
        .prop_map(|(mu, sigma, lambda, a, gamma, jr)| ModelParams {
            mu,
            sigma,
            lambda,
            a,
            gamma,
            jmax: gamma * jr,
        })
}

fn quadratic_forms(w: &[f64], h: f64) -> (f64, f64) {
    let m = w.len();
    let (mut wsw, mut wmw) = (0.0, 0.0);
    for i in 0..=m {
        let l = if i > 0 { w[i - 1] } else { 0.0 };
        let r = if i < m { w[i] } else { 0.0 };
        wsw += (r - l) * (r - l) / h;
        wmw += h / 3.0 * (l * l + l * r + r * r);
    }
    (wsw, wmw)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mesh_is_uniform_and_ordered(a in -1.0..0.0f64, len in 1e-3..2.0f64, n in 2usize..500) {
        let m = Mesh::uniform(a, a + len, n).unwrap();
        prop_assert_eq!(m.nodes().len(), n + 1);
        prop_assert_eq!(m.nodes()[0], a);
        prop_assert_eq!(m.nodes()[n], a + len);
        for w in m.nodes().windows(2) {
            prop_assert!(w[1] > w[0]);
            prop_assert!(((w[1] - w[0]) - m.h()).abs() <= 1e-12 * len);
        }
    }

    #[test]
    fn cdf_is_monotone_and_symmetric(gamma in 0.001..0.1f64, jr in 0.5..6.0f64, t in -1.0..1.0f64, s in 0.0..1.0f64) {
        let d = JumpDensity::new(gamma, gamma * jr).unwrap();
        let j = d.jmax();
        let (y1, y2) = (t * j, (t + s * (1.0 - t)) * j);
        prop_assert!(d.cdf(y1) <= d.cdf(y2) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&d.cdf(y1)));
        prop_assert!((d.cdf(y1) + d.cdf(-y1) - 1.0).abs() < 1e-14);
        prop_assert_eq!(d.density(y1), d.density(-y1));
        let u = d.cdf(y1);
        prop_assert!((d.inverse_cdf(u) - y1).abs() < 1e-9 * j.max(1.0) / (d.density(y1) * j).max(1e-3));
    }

    #[test]
    fn coercivity_lower_bound(p in params_strategy(), n in 5usize..80, seed in any::<u64>()) {
        let b = 0.04;
        let sys = assemble(&p, b, n).unwrap();
        let h = sys.mesh().h();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let aw = sys.matvec(&w);
        let quad: f64 = w.iter().zip(&aw).map(|(x, y)| x * y).sum();
        let (wsw, wmw) = quadratic_forms(&w, h);
        let lower = 0.5 * p.sigma * p.sigma * wsw - 0.5 * p.mu * wmw;
        let scale = 0.5 * p.sigma * p.sigma * wsw + 0.5 * p.mu * wmw;
        prop_assert!(quad >= lower - 1e-12 * scale, "{} < {}", quad, lower);
    }

    #[test]
    fn convolution_part_is_symmetric(p in params_strategy(), n in 3usize..60) {
        let sys = assemble(&p, 0.05, n).unwrap();
        let m = sys.dim();
        for i in 0..m {
            for j in 0..m {
                prop_assert!((sys.convolution_part_entry(i, j) - sys.convolution_part_entry(j, i)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn jump_free_system_is_tridiagonal(p in params_strategy(), n in 3usize..60) {
        let sys = assemble(&p.with_lambda(0.0), 0.05, n).unwrap();
        let dense = sys.to_dense();
        let m = sys.dim();
        for i in 0..m {
            for j in 0..m {
                if i.abs_diff(j) > 1 {
                    prop_assert_eq!(dense[i * m + j], 0.0);
                }
            }
        }
        prop_assert!(sys.kernel().is_empty());
    }

    #[test]
    fn dense_copy_agrees_with_entries_and_matvec(p in params_strategy(), n in 3usize..40, seed in any::<u64>()) {
        let sys = assemble(&p, 0.05, n).unwrap();
        let m = sys.dim();
        let dense = sys.to_dense();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let aw = sys.matvec(&w);
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                prop_assert!((dense[i * m + j] - sys.entry(i, j)).abs() <= 1e-12 * (1.0 + dense[i * m + j].abs()));
                acc += dense[i * m + j] * w[j];
            }
            prop_assert!((acc - aw[i]).abs() <= 1e-10 * (1.0 + sys.norm_inf()));
        }
    }

    #[test]
    fn interpolant_conventions(vals in proptest::collection::vec(-1.0..1.0f64, 3..30), t in 0.0..1.0f64) {
        let n = vals.len() - 1;
        let nodes: Vec<f64> = (0..=n).map(|i| -0.1 + 0.2 * i as f64 / n as f64).collect();
        let v = PiecewiseLinear::new(&nodes, &vals);
        for (x, y) in nodes.iter().zip(&vals) {
            prop_assert_eq!(v.eval(*x), *y);
        }
        prop_assert_eq!(v.eval(-0.1 - 1e-9), 0.0);
        prop_assert_eq!(v.eval(0.1 + 1e-9), 0.0);
        let x = -0.1 + 0.2 * t;
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v.eval(x) >= lo - 1e-15 && v.eval(x) <= hi + 1e-15);
    }

    #[test]
    fn solution_boundary_values_and_value_function(p in params_strategy(), n in 4usize..200, x in -0.5..0.5f64) {
        let b = 0.04;
        let sol = pairstop::fem::solve_problem(&p, b, n).unwrap();
        let c = sol.coeffs();
        prop_assert_eq!(c[0], 0.0);
        prop_assert_eq!(c[n], 0.0);
        prop_assert_eq!(sol.eval(p.a), 0.0);
        prop_assert_eq!(sol.eval(b), 0.0);
        prop_assert_eq!(sol.value_function(p.a), p.a);
        prop_assert_eq!(sol.value_function(b), b);
        if x < p.a || x > b {
            prop_assert_eq!(sol.value_function(x), x);
        }
        prop_assert!(sol.diagnostics().residual_max <= 1e-10);
        prop_assert!(sol.diagnostics().residual_max <= 1e-10 * sol.diagnostics().load_max);
        prop_assert_eq!(sol.derivative_at_b(), -c[n - 1] / sol.mesh().h());
    }
}

#[test]
fn jump_sampler_passes_kolmogorov_smirnov() {
    let d = JumpDensity::new(0.02, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
    assert!(xs.iter().all(|y| y.abs() < 0.05));
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let f = d.cdf(y);
            (f - i as f64 / nf).abs().max(((i + 1) as f64 / nf - f).abs())
        })
        .fold(0.0, f64::max);
    // 1% critical value of the one-sample statistic
    let crit = 1.628 / nf.sqrt();
    assert!(ks < crit, "D = {ks}, critical {crit}");
}

#[test]
fn exact_ou_step_moments() {
    let (mu, sigma, x, dt) = (8.0, 0.2, 0.03, 0.01);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n)
        .map(|_| ou_transition(x, dt, mu, sigma, StandardNormal.sample(&mut rng)))
        .collect();
    let nf = n as f64;
    let mean = draws.iter().sum::<f64>() / nf;
    let var = draws.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / (nf - 1.0);
    let want_mean = x * (-mu * dt).exp();
    let want_var = sigma * sigma * (1.0 - (-2.0 * mu * dt).exp()) / (2.0 * mu);
    assert!((mean - want_mean).abs() < 3.0 * (want_var / nf).sqrt());
    assert!((var - want_var).abs() < 3.0 * want_var * (2.0 / nf).sqrt());
}

#[test]
fn monte_carlo_is_thread_count_independent() {
    let p = ModelParams::reference();
    let opts = McOptions {
        n_paths: 3000,
        dt: Some(1e-4),
        seed: 42,
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_with(&p, 0.0573, 0.01, opts).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn stopped_values_stay_within_jump_reach() {
    let p = ModelParams::reference().with_lambda(30.0);
    let b = 0.056;
    let est = simulate_stopped_value(&p, b, 0.0, 5000, Some(1e-4), 3).unwrap();
    assert!(est.min_stopped >= p.a - p.jmax);
    assert!(est.max_stopped <= b + p.jmax);
    assert!(est.std_err > 0.0);
}

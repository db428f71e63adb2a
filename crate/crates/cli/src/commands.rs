//! One function per subcommand. Each returns the JSON result, the tables
//! for CSV output and the command-specific metadata entries.

use clap::ValueEnum;
use pairstop::boundary::{find_boundary_with, BoundaryOptions, DEFAULT_TOL_B};
use pairstop::fem::{self, BvpSolution};
use pairstop::verify::{check_conditions_with, simulate_with, Integrand, McOptions};
use pairstop::{constants, convergence_study, f_n, FreeBoundaryResult};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Outcome, Table};

/// Tolerance used when `check-conditions` has to locate `b_N` itself. The
/// node next to `b` carries `-h F_N(b_N)`, so a loose root shows up as a
/// spurious negative `v_N`.
pub const CONDITIONS_TOL_B: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum IntegrandArg {
    /// `v = u - x` (the generator inequality)
    #[default]
    Shifted,
    /// `u = v + x`, diagnostic
    Value,
}

impl From<IntegrandArg> for Integrand {
    fn from(arg: IntegrandArg) -> Self {
        match arg {
            IntegrandArg::Shifted => Integrand::Shifted,
            IntegrandArg::Value => Integrand::Value,
        }
    }
}

pub type CommandOutput = (Outcome, Map<String, Value>);

fn extra(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn solution_json(sol: &BvpSolution) -> Value {
    let x = sol.mesh().nodes();
    let v = sol.coeffs();
    let u: Vec<f64> = x.iter().zip(v).map(|(x, v)| x + v).collect();
    json!({ "x": x, "v": v, "u": u })
}

fn solution_table(sol: &BvpSolution) -> Table {
    let mut t = Table::new("solution", &["x", "v", "u"]);
    for (x, v) in sol.mesh().nodes().iter().zip(sol.coeffs()) {
        t.push_values(&[*x, *v, x + v]);
    }
    t
}

fn solution_summary(sol: &BvpSolution) -> Map<String, Value> {
    let (max_v, x_at_max_v) = sol.max_value();
    let d = sol.diagnostics();
    extra(&[
        ("min_v", json!(sol.min_value())),
        ("max_v", json!(max_v)),
        ("x_at_max_v", json!(x_at_max_v)),
        (
            "diagnostics",
            json!({
                "solver": d.solver,
                "iterations": d.iterations,
                "residual_max": d.residual_max,
                "load_max": d.load_max,
                "h": d.h,
                "h0": d.h0,
                "h_over_h0": d.h_over_h0(),
            }),
        ),
    ])
}

fn boundary_json(r: &FreeBoundaryResult, tol_b: f64) -> Map<String, Value> {
    let mut m = extra(&[
        ("b_n", json!(r.b_n)),
        ("f_at_root", json!(r.f_at_root)),
        ("iterations", json!(r.iterations)),
        ("n", json!(r.n)),
        ("tol_b", json!(tol_b)),
        ("bracket", json!([r.bracket.0, r.bracket.1])),
        (
            "initial_bracket",
            json!([r.initial_bracket.0, r.initial_bracket.1]),
        ),
        ("f_lo", json!(r.f_lo)),
        ("f_hi", json!(r.f_hi)),
    ]);
    m.extend(solution_summary(&r.solution));
    m
}

/// Options of `solve`: an optional `F_N(b)` scan over a uniform grid of `b`.
#[derive(Debug, Clone, Copy)]
pub struct Scan {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

pub fn solve(cfg: &RunConfig, scan: Option<Scan>) -> Result<CommandOutput, CliError> {
    let b = cfg.require_b()?;
    let sys = fem::assemble(&cfg.params, b, cfg.n)?;
    let sol = fem::solve(&sys)?;
    let mut result = extra(&[
        ("b", json!(b)),
        ("n", json!(cfg.n)),
        ("f_n", json!(sol.derivative_at_b())),
    ]);
    result.extend(solution_summary(&sol));
    result.insert("solution".into(), solution_json(&sol));
    let mut tables = vec![solution_table(&sol)];

    if let Some(scan) = scan {
        if scan.points < 2 {
            return Err(CliError::config("scan_points", "need at least 2 points"));
        }
        if !(scan.from > cfg.params.a && scan.to > scan.from) {
            return Err(CliError::config(
                "scan_to",
                format!("need a < scan_from < scan_to, got [{}, {}]", scan.from, scan.to),
            ));
        }
        let bs: Vec<f64> = (0..scan.points)
            .map(|i| scan.from + (scan.to - scan.from) * i as f64 / (scan.points - 1) as f64)
            .collect();
        let values = bs
            .par_iter()
            .map(|&b| f_n(&cfg.params, b, cfg.n))
            .collect::<Result<Vec<f64>, _>>()?;
        let mut t = Table::new("f_n_scan", &["b", "f_n"]);
        for (b, f) in bs.iter().zip(&values) {
            t.push_values(&[*b, *f]);
        }
        result.insert("f_n_scan".into(), json!({ "b": bs, "f_n": values }));
        tables.push(t);
    }
    let meta = extra(&[("b", json!(b))]);
    Ok((
        Outcome {
            result: Value::Object(result),
            tables,
        },
        meta,
    ))
}

pub fn find_boundary(cfg: &RunConfig, opts: &BoundaryOptions) -> Result<CommandOutput, CliError> {
    let tol_b = cfg.tol_b_or(DEFAULT_TOL_B);
    let r = find_boundary_with(&cfg.params, cfg.n, tol_b, opts)?;
    let mut result = boundary_json(&r, tol_b);
    result.insert("solution".into(), solution_json(&r.solution));
    let meta = extra(&[("tol_b", json!(tol_b))]);
    Ok((
        Outcome {
            result: Value::Object(result),
            tables: vec![solution_table(&r.solution)],
        },
        meta,
    ))
}

pub fn converge(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let tol_b = cfg.tol_b_or(DEFAULT_TOL_B);
    let report = convergence_study(&cfg.params, &cfg.ns, tol_b)?;
    let mut t = Table::new("table", &["n", "b_n", "delta", "iterations", "f_at_root"]);
    for row in &report.rows {
        t.push(vec![
            Some(row.n as f64),
            Some(row.b_n),
            row.delta,
            Some(row.iterations as f64),
            Some(row.f_at_root),
        ]);
    }
    let result = json!({
        "tol_b": tol_b,
        "rows": report.rows,
        "decreasing": report.decreasing,
        "deltas_shrinking": report.deltas_shrinking,
    });
    let meta = extra(&[("ns", json!(cfg.ns)), ("tol_b", json!(tol_b))]);
    Ok((
        Outcome {
            result,
            tables: vec![t],
        },
        meta,
    ))
}

/// Solution at the given `b`, or at `b_N` when no `b` is configured.
fn solution_for(
    cfg: &RunConfig,
    tol_b: f64,
) -> Result<(BvpSolution, &'static str, Map<String, Value>), CliError> {
    match cfg.b {
        Some(b) => {
            let sys = fem::assemble(&cfg.params, b, cfg.n)?;
            Ok((fem::solve(&sys)?, "given", Map::new()))
        }
        None => {
            let r = find_boundary_with(&cfg.params, cfg.n, tol_b, &BoundaryOptions::default())?;
            let summary = extra(&[
                ("f_at_root", json!(r.f_at_root)),
                ("iterations", json!(r.iterations)),
                ("tol_b", json!(tol_b)),
            ]);
            Ok((r.solution, "find-boundary", summary))
        }
    }
}

pub fn check_conditions(
    cfg: &RunConfig,
    samples: usize,
    integrand: IntegrandArg,
) -> Result<CommandOutput, CliError> {
    if samples == 0 {
        return Err(CliError::config("samples", "need at least one sample"));
    }
    let tol_b = cfg.tol_b_or(CONDITIONS_TOL_B);
    let (sol, source, summary) = solution_for(cfg, tol_b)?;
    let report = check_conditions_with(&sol, samples, integrand.into());

    let mut curve = Table::new("margin_curve", &["x", "lhs", "rhs", "margin"]);
    for s in &report.margin_curve {
        curve.push_values(&[s.x, s.lhs, s.rhs, s.rhs - s.lhs]);
    }
    let xs: Vec<f64> = report.margin_curve.iter().map(|s| s.x).collect();
    let lhs: Vec<f64> = report.margin_curve.iter().map(|s| s.lhs).collect();
    let rhs: Vec<f64> = report.margin_curve.iter().map(|s| s.rhs).collect();

    let mut result = extra(&[
        ("b_n", json!(sol.b())),
        ("b_source", json!(source)),
        ("n", json!(cfg.n)),
        ("integrand", json!(Integrand::from(integrand))),
        ("samples", json!(samples)),
        ("condition_a_holds", json!(report.condition_a_holds)),
        ("worst_margin", json!(report.worst_margin)),
        ("worst_x", json!(report.worst_x)),
        ("condition_b_holds", json!(report.condition_b_holds)),
        ("min_v", json!(report.min_v)),
    ]);
    result.extend(summary);
    result.insert("margin_curve".into(), json!({ "x": xs, "lhs": lhs, "rhs": rhs }));
    result.insert("solution".into(), solution_json(&sol));

    let mut meta = extra(&[("tol_b", json!(tol_b))]);
    if let Some(b) = cfg.b {
        meta.insert("b".into(), json!(b));
    }
    Ok((
        Outcome {
            result: Value::Object(result),
            tables: vec![curve, solution_table(&sol)],
        },
        meta,
    ))
}

pub fn simulate(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let tol_b = cfg.tol_b_or(DEFAULT_TOL_B);
    let (sol, source, summary) = solution_for(cfg, tol_b)?;
    let b = sol.b();
    let opts = McOptions {
        n_paths: cfg.paths,
        dt: cfg.dt,
        seed: cfg.seed,
    };
    let mut table = Table::new(
        "estimates",
        &[
            "x0",
            "mean",
            "std_err",
            "fine_mean",
            "bias_allowance",
            "u_fem",
            "difference",
            "tolerance",
        ],
    );
    let mut estimates = Vec::with_capacity(cfg.x0.len());
    for &x0 in &cfg.x0 {
        let est = simulate_with(&cfg.params, b, x0, opts)?;
        let u_fem = sol.value_function(x0);
        let difference = est.mean - u_fem;
        let tolerance = 3.0 * est.std_err + est.bias_allowance;
        table.push_values(&[
            x0,
            est.mean,
            est.std_err,
            est.fine_mean,
            est.bias_allowance,
            u_fem,
            difference,
            tolerance,
        ]);
        let mut entry = match serde_json::to_value(&est) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        entry.insert("u_fem".into(), json!(u_fem));
        entry.insert("difference".into(), json!(difference));
        entry.insert("tolerance".into(), json!(tolerance));
        entry.insert("within_tolerance".into(), json!(difference.abs() <= tolerance));
        estimates.push(Value::Object(entry));
    }
    let mut result = extra(&[("b", json!(b)), ("b_source", json!(source)), ("n", json!(cfg.n))]);
    result.extend(summary);
    result.insert("estimates".into(), Value::Array(estimates));

    let mut meta = extra(&[
        ("seed", json!(cfg.seed)),
        ("paths", json!(cfg.paths)),
        ("dt", json!(cfg.dt)),
        ("x0", json!(cfg.x0)),
    ]);
    if let Some(b) = cfg.b {
        meta.insert("b".into(), json!(b));
    }
    Ok((
        Outcome {
            result: Value::Object(result),
            tables: vec![table],
        },
        meta,
    ))
}

const CONSTANT_NAMES: [&str; 15] = [
    "c1",
    "c2",
    "c3",
    "c4",
    "c5",
    "c6",
    "c7",
    "c8",
    "c9",
    "c10",
    "c11",
    "c12",
    "gamma_hat",
    "h0",
    "norm_f",
];

pub fn constants_cmd(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let b = cfg.require_b()?;
    let k = constants(&cfg.params, b);
    let h = (b - cfg.params.a) / cfg.n as f64;
    let bounds = k.a_priori(cfg.params.sigma, h);
    let values = serde_json::to_value(k).map_err(|e| CliError::Io(e.to_string()))?;
    let mut table = Table::new("constants", &CONSTANT_NAMES);
    table.push(CONSTANT_NAMES.iter().map(|name| values[*name].as_f64()).collect());
    let result = json!({
        "b": b,
        "constants": values,
        "a_priori": bounds,
        "h_over_h0": h / k.h0,
    });
    let meta = extra(&[("b", json!(b))]);
    Ok((
        Outcome {
            result,
            tables: vec![table],
        },
        meta,
    ))
}

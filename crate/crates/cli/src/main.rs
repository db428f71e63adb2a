//! `pairstop`: command-line front end for the free-boundary solver.

mod commands;
mod config;
mod error;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pairstop::boundary::BoundaryOptions;
use pairstop::verify::DEFAULT_CONDITION_SAMPLES;

use crate::commands::{IntegrandArg, Scan};
use crate::config::CommonArgs;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pairstop",
    version,
    about = "Optimal closing threshold for a mean-reverting spread with jumps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the boundary value problem on [a, b] and report F_N(b)
    Solve {
        /// first b of an F_N(b) scan
        #[arg(long, allow_negative_numbers = true)]
        scan_from: Option<f64>,
        /// last b of the scan
        #[arg(long, allow_negative_numbers = true)]
        scan_to: Option<f64>,
        /// number of scan points; 0 disables the scan
        #[arg(long, default_value_t = 0)]
        scan_points: usize,
    },
    /// Locate the free boundary b_N by bracketing and bisection
    FindBoundary {
        /// first trial b (default 0.1 |a|)
        #[arg(long)]
        b_init: Option<f64>,
        /// bracket expansion factor
        #[arg(long, default_value_t = 1.5)]
        growth: f64,
    },
    /// b_N for a list of element counts
    Converge,
    /// Check the verification hypotheses at b_N (or at --b)
    CheckConditions {
        /// sample points in (b, b + J]
        #[arg(long, default_value_t = DEFAULT_CONDITION_SAMPLES)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = IntegrandArg::Shifted)]
        integrand: IntegrandArg,
    },
    /// Monte Carlo estimate of the stopped spread value
    Simulate,
    /// Constants of the error analysis at --b
    Constants,
    /// Check a result document written by this tool
    Validate { file: PathBuf },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::FindBoundary { .. } => "find-boundary",
            Command::Converge => "converge",
            Command::CheckConditions { .. } => "check-conditions",
            Command::Simulate => "simulate",
            Command::Constants => "constants",
            Command::Validate { .. } => "validate",
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("PAIRSTOP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::config(
            "PAIRSTOP_THREADS",
            format!("expected a positive integer, got {raw:?}"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config("PAIRSTOP_THREADS", e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    if let Command::Validate { file } = &cli.command {
        let report = validate::validate_file(file)?;
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?
        );
        return Ok(());
    }
    let cfg = cli.common.resolve()?;
    let name = cli.command.name();
    let (outcome, extra) = match &cli.command {
        Command::Solve {
            scan_from,
            scan_to,
            scan_points,
        } => {
            let scan = (*scan_points > 0).then(|| Scan {
                from: scan_from.unwrap_or(0.0),
                to: scan_to.unwrap_or(0.1),
                points: *scan_points,
            });
            commands::solve(&cfg, scan)?
        }
        Command::FindBoundary { b_init, growth } => {
            if !(growth.is_finite() && *growth > 1.0) {
                return Err(CliError::config("growth", format!("must be > 1, got {growth}")));
            }
            let opts = BoundaryOptions {
                b_init: *b_init,
                growth: *growth,
                ..BoundaryOptions::default()
            };
            commands::find_boundary(&cfg, &opts)?
        }
        Command::Converge => commands::converge(&cfg)?,
        Command::CheckConditions { samples, integrand } => {
            commands::check_conditions(&cfg, *samples, *integrand)?
        }
        Command::Simulate => commands::simulate(&cfg)?,
        Command::Constants => commands::constants_cmd(&cfg)?,
        Command::Validate { .. } => unreachable!(),
    };
    let doc = output::document(output::metadata(name, &cfg, extra), outcome.result.clone());
    output::emit(&doc, &outcome, &cfg, name)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pairstop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

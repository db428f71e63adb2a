//! Flag and config-file merging.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pairstop::ModelParams;
use serde_json::{Map, Value};

use crate::error::CliError;

pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_NS: [usize; 4] = [2000, 4000, 6000, 8000];
pub const DEFAULT_X0: [f64; 3] = [-0.05, 0.0, 0.03];
pub const DEFAULT_PATHS: usize = 20_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Options shared by every subcommand. Unset flags fall back to the config
/// file, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// lower barrier (negative)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// jump size scale
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// jump truncation
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub jmax: Option<f64>,
    /// number of elements
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// right endpoint
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// element counts for `converge`
    #[arg(long, global = true, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    /// bisection tolerance on b
    #[arg(long = "tol-b", global = true, allow_negative_numbers = true)]
    pub tol_b: Option<f64>,
    /// Monte Carlo start points
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Monte Carlo monitoring step
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// flat JSON object with any of the keys above
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// output file (stdout when absent)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// directory for CSV curve files
    #[arg(long = "csv-dir", global = true)]
    pub csv_dir: Option<PathBuf>,
}

/// Fully resolved settings. Values not given anywhere stay `None` where the
/// command decides the default.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub n: usize,
    pub b: Option<f64>,
    pub ns: Vec<usize>,
    pub tol_b: Option<f64>,
    pub x0: Vec<f64>,
    pub paths: usize,
    pub dt: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub csv_dir: Option<PathBuf>,
}

const KEYS: [&str; 17] = [
    "mu", "sigma", "lambda", "a", "gamma", "jmax", "n", "b", "ns", "tol_b", "x0", "paths", "dt", "seed",
    "out", "format", "csv_dir",
];

struct FileConfig(Map<String, Value>);

impl FileConfig {
    fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config("config", format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::config("config", format!("{} is not valid JSON: {e}", path.display())))?;
        let Value::Object(map) = value else {
            return Err(CliError::config("config", "expected a JSON object"));
        };
        if let Some(key) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(CliError::config(key, "unknown config key"));
        }
        Ok(FileConfig(map))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| CliError::config(key, format!("expected a number, got {v}"))),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v
                .as_u64()
                .map(Some)
                .ok_or_else(|| CliError::config(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, CliError> {
        Ok(self.u64(key)?.map(|x| x as usize))
    }

    fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(CliError::config(key, format!("expected a string, got {v}"))),
        }
    }

    fn list<T>(&self, key: &str, item: impl Fn(&Value) -> Option<T>) -> Result<Option<Vec<T>>, CliError> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|x| item(x).ok_or_else(|| CliError::config(key, format!("bad list entry {x}"))))
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
            Some(v) => Ok(Some(vec![item(v).ok_or_else(|| {
                CliError::config(key, format!("expected a list, got {v}"))
            })?])),
        }
    }
}

impl CommonArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig(Map::new()),
        };
        let reference = ModelParams::reference();
        let params = ModelParams {
            mu: self.mu.or(file.f64("mu")?).unwrap_or(reference.mu),
            sigma: self.sigma.or(file.f64("sigma")?).unwrap_or(reference.sigma),
            lambda: self.lambda.or(file.f64("lambda")?).unwrap_or(reference.lambda),
            a: self.a.or(file.f64("a")?).unwrap_or(reference.a),
            gamma: self.gamma.or(file.f64("gamma")?).unwrap_or(reference.gamma),
            jmax: self.jmax.or(file.f64("jmax")?).unwrap_or(reference.jmax),
        };
        params.validate()?;

        let format = match (self.format, file.string("format")?) {
            (Some(f), _) => f,
            (None, Some(s)) => Format::from_str(&s, true)
                .map_err(|_| CliError::config("format", format!("expected json or csv, got {s:?}")))?,
            (None, None) => Format::Json,
        };

        let cfg = RunConfig {
            params,
            n: self.n.or(file.usize("n")?).unwrap_or(DEFAULT_N),
            b: self.b.or(file.f64("b")?),
            ns: match &self.ns {
                Some(ns) => ns.clone(),
                None => file
                    .list("ns", |v| v.as_u64().map(|x| x as usize))?
                    .unwrap_or_else(|| DEFAULT_NS.to_vec()),
            },
            tol_b: self.tol_b.or(file.f64("tol_b")?),
            x0: match &self.x0 {
                Some(x0) => x0.clone(),
                None => file
                    .list("x0", Value::as_f64)?
                    .unwrap_or_else(|| DEFAULT_X0.to_vec()),
            },
            paths: self.paths.or(file.usize("paths")?).unwrap_or(DEFAULT_PATHS),
            dt: self.dt.or(file.f64("dt")?),
            seed: self.seed.or(file.u64("seed")?).unwrap_or(DEFAULT_SEED),
            out: self.out.clone().or(file.string("out")?.map(PathBuf::from)),
            format,
            csv_dir: self
                .csv_dir
                .clone()
                .or(file.string("csv_dir")?.map(PathBuf::from)),
        };
        cfg.check()?;
        Ok(cfg)
    }
}

impl RunConfig {
    fn check(&self) -> Result<(), CliError> {
        if self.n < 2 {
            return Err(CliError::config(
                "n",
                format!("need at least 2 elements, got {}", self.n),
            ));
        }
        if let Some(b) = self.b {
            if !(b.is_finite() && b > self.params.a) {
                return Err(CliError::config(
                    "b",
                    format!("need b > a = {}, got {b}", self.params.a),
                ));
            }
        }
        if self.ns.is_empty() || self.ns.iter().any(|&n| n < 2) {
            return Err(CliError::config("ns", "need a non-empty list of counts >= 2"));
        }
        if let Some(tol) = self.tol_b {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(CliError::config("tol_b", format!("must be > 0, got {tol}")));
            }
        }
        if self.x0.is_empty() {
            return Err(CliError::config("x0", "need at least one start point"));
        }
        if self.paths == 0 {
            return Err(CliError::config("paths", "need at least one path"));
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::config("dt", format!("must be > 0, got {dt}")));
            }
        }
        Ok(())
    }

    pub fn tol_b_or(&self, default: f64) -> f64 {
        self.tol_b.unwrap_or(default)
    }

    pub fn require_b(&self) -> Result<f64, CliError> {
        self.b
            .ok_or_else(|| CliError::config("b", "this command needs --b"))
    }
}

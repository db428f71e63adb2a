//! Result documents, CSV tables and number formatting.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const TOOL: &str = "pairstop";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Rounds to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().unwrap_or(x)
}

/// Rounds every float in a JSON tree in place; integers are left alone.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *value = json!(round_sig(x));
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// A named table with float or integer cells; `None` prints as an empty cell.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Table {
            name,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_values(&mut self, row: &[f64]) {
        self.push(row.iter().copied().map(Some).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Some(x) => format_cell(*x),
                    None => String::new(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn format_cell(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let r = round_sig(x);
    let a = r.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        return format!("{r:e}");
    }
    format!("{r}")
}

/// What a command produced: a JSON result plus tables, the first of which is
/// the primary CSV output.
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
}

pub fn metadata(command: &str, cfg: &RunConfig, extra: Map<String, Value>) -> Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut meta = Map::new();
    meta.insert("tool".into(), json!(TOOL));
    meta.insert("version".into(), json!(VERSION));
    meta.insert("command".into(), json!(command));
    meta.insert("params".into(), json!(cfg.params));
    meta.insert("n".into(), json!(cfg.n));
    meta.insert("seed".into(), Value::Null);
    meta.extend(extra);
    meta.insert("timestamp".into(), json!(timestamp));
    Value::Object(meta)
}

pub fn document(metadata: Value, result: Value) -> Value {
    let mut doc = json!({ "metadata": metadata, "result": result });
    round_floats(&mut doc);
    doc
}

pub fn emit(doc: &Value, outcome: &Outcome, cfg: &RunConfig, command: &str) -> Result<(), CliError> {
    let text = match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => match outcome.tables.first() {
            Some(t) => t.to_csv(),
            None => return Err(CliError::config("format", format!("{command} has no CSV output"))),
        },
    };
    match &cfg.out {
        Some(path) => write_file(path, &text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                Err(e) if e.kind() != ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    if let Some(dir) = &cfg.csv_dir {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for table in &outcome.tables {
            write_file(
                &dir.join(format!("{command}_{}.csv", table.name)),
                &table.to_csv(),
            )?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(round_sig(0.057293441234), 0.0572934412);
        assert_eq!(round_sig(-123456789.87), -123456790.0);
        assert_eq!(round_sig(0.0), 0.0);
        assert!(round_sig(f64::NAN).is_nan());
    }

    #[test]
    fn integers_untouched() {
        let mut v = json!({"n": 2000, "x": [0.1234567891234, 3]});
        round_floats(&mut v);
        assert_eq!(v, json!({"n": 2000, "x": [0.123456789, 3]}));
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("t", &["n", "b_n", "delta"]);
        t.push(vec![Some(2000.0), Some(0.0572934412345), None]);
        t.push(vec![Some(4000.0), Some(0.05727378), Some(-1.966e-5)]);
        assert_eq!(
            t.to_csv(),
            "n,b_n,delta\n2000,0.0572934412,\n4000,0.05727378,-1.966e-5\n"
        );
    }
}

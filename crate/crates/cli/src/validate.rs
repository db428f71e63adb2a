//! Schema check for result documents written by this tool.

use std::fs;
use std::path::Path;

use pairstop::ModelParams;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::TOOL;

#[derive(Clone, Copy)]
enum Kind {
    Number,
    Integer,
    Bool,
    Text,
    Array,
    Object,
}

impl Kind {
    fn matches(self, v: &Value) -> bool {
        match self {
            // non-finite floats are written as null
            Kind::Number => v.is_number() || v.is_null(),
            Kind::Integer => v.is_u64(),
            Kind::Bool => v.is_boolean(),
            Kind::Text => v.is_string(),
            Kind::Array => v.is_array(),
            Kind::Object => v.is_object(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Number => "number",
            Kind::Integer => "integer",
            Kind::Bool => "boolean",
            Kind::Text => "string",
            Kind::Array => "array",
            Kind::Object => "object",
        }
    }
}

use Kind::{Array, Bool, Integer, Number, Object, Text};

const SOLUTION_FIELDS: [(&str, Kind); 5] = [
    ("min_v", Number),
    ("max_v", Number),
    ("x_at_max_v", Number),
    ("diagnostics", Object),
    ("solution", Object),
];

fn result_schema(command: &str) -> Option<Vec<(&'static str, Kind)>> {
    let fields: Vec<(&str, Kind)> = match command {
        "solve" => [("b", Number), ("n", Integer), ("f_n", Number)]
            .into_iter()
            .chain(SOLUTION_FIELDS)
            .collect(),
        "find-boundary" => [
            ("b_n", Number),
            ("f_at_root", Number),
            ("iterations", Integer),
            ("n", Integer),
            ("tol_b", Number),
            ("bracket", Array),
            ("initial_bracket", Array),
        ]
        .into_iter()
        .chain(SOLUTION_FIELDS)
        .collect(),
        "converge" => vec![
            ("tol_b", Number),
            ("rows", Array),
            ("decreasing", Bool),
            ("deltas_shrinking", Bool),
        ],
        "check-conditions" => vec![
            ("b_n", Number),
            ("b_source", Text),
            ("n", Integer),
            ("integrand", Text),
            ("samples", Integer),
            ("condition_a_holds", Bool),
            ("worst_margin", Number),
            ("worst_x", Number),
            ("condition_b_holds", Bool),
            ("min_v", Number),
            ("margin_curve", Object),
            ("solution", Object),
        ],
        "simulate" => vec![
            ("b", Number),
            ("b_source", Text),
            ("n", Integer),
            ("estimates", Array),
        ],
        "constants" => vec![
            ("b", Number),
            ("constants", Object),
            ("a_priori", Object),
            ("h_over_h0", Number),
        ],
        _ => return None,
    };
    Some(fields)
}

const ROW_FIELDS: [(&str, Kind); 5] = [
    ("n", Integer),
    ("b_n", Number),
    ("delta", Number),
    ("iterations", Integer),
    ("f_at_root", Number),
];

const ESTIMATE_FIELDS: [(&str, Kind); 6] = [
    ("x0", Number),
    ("mean", Number),
    ("std_err", Number),
    ("n_paths", Integer),
    ("seed", Integer),
    ("u_fem", Number),
];

const CONSTANT_FIELDS: [&str; 15] = [
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

fn require<'a>(obj: &'a Value, path: &str, key: &str, kind: Kind) -> Result<&'a Value, CliError> {
    let field = if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    };
    let v = obj.get(key).ok_or_else(|| CliError::config(&field, "missing"))?;
    if !kind.matches(v) {
        return Err(CliError::config(
            &field,
            format!("expected {}, got {v}", kind.name()),
        ));
    }
    Ok(v)
}

fn check_all(obj: &Value, path: &str, fields: &[(&str, Kind)]) -> Result<(), CliError> {
    for (key, kind) in fields {
        require(obj, path, key, *kind)?;
    }
    Ok(())
}

fn check_entries(list: &Value, path: &str, fields: &[(&str, Kind)]) -> Result<(), CliError> {
    let items = list.as_array().map(Vec::as_slice).unwrap_or_default();
    for (i, item) in items.iter().enumerate() {
        check_all(item, &format!("{path}[{i}]"), fields)?;
    }
    Ok(())
}

/// Checks a document and returns its command name.
pub fn validate_document(doc: &Value) -> Result<String, CliError> {
    let meta = require(doc, "", "metadata", Object)?;
    let tool = require(meta, "metadata", "tool", Text)?;
    if tool != TOOL {
        return Err(CliError::config(
            "metadata.tool",
            format!("expected {TOOL:?}, got {tool}"),
        ));
    }
    require(meta, "metadata", "version", Text)?;
    require(meta, "metadata", "n", Integer)?;
    require(meta, "metadata", "timestamp", Integer)?;
    let command = require(meta, "metadata", "command", Text)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    let params: ModelParams = serde_json::from_value(require(meta, "metadata", "params", Object)?.clone())
        .map_err(|e| CliError::config("metadata.params", e.to_string()))?;
    params.validate().map_err(|e| match e.field() {
        Some(f) => CliError::config(&format!("metadata.params.{f}"), e.to_string()),
        None => CliError::config("metadata.params", e.to_string()),
    })?;

    let schema = result_schema(&command)
        .ok_or_else(|| CliError::config("metadata.command", format!("unknown command {command:?}")))?;
    let result = require(doc, "", "result", Object)?;
    check_all(result, "result", &schema)?;
    match command.as_str() {
        "converge" => check_entries(&result["rows"], "result.rows", &ROW_FIELDS)?,
        "simulate" => check_entries(&result["estimates"], "result.estimates", &ESTIMATE_FIELDS)?,
        "constants" => {
            for key in CONSTANT_FIELDS {
                require(&result["constants"], "result.constants", key, Number)?;
            }
        }
        _ => {}
    }
    if let Some(sol) = result.get("solution") {
        let x = require(sol, "result.solution", "x", Array)?;
        for key in ["v", "u"] {
            let col = require(sol, "result.solution", key, Array)?;
            if col.as_array().map(Vec::len) != x.as_array().map(Vec::len) {
                return Err(CliError::config(
                    &format!("result.solution.{key}"),
                    "length differs from x",
                ));
            }
        }
    }
    Ok(command)
}

pub fn validate_file(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::config("file", format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config("file", format!("{} is not valid JSON: {e}", path.display())))?;
    let command = validate_document(&doc)?;
    Ok(json!({ "valid": true, "command": command, "file": path.display().to_string() }))
}

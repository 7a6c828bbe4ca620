use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, RunConfig};
use crate::Failure;

pub const SCHEMA_VERSION: u32 = 1;
const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds `v` to twelve significant digits.
pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .unwrap_or(v)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Wraps `result` with the schema version and the config echo.
pub fn envelope(
    command: Command,
    cfg: &RunConfig,
    result: impl Serialize,
) -> Result<Value, Failure> {
    let result = serde_json::to_value(result).map_err(|e| Failure::Input(e.to_string()))?;
    let mut doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "result": result,
    });
    round_value(&mut doc);
    Ok(doc)
}

/// First line of every CSV artifact.
pub fn csv_header_comment(command: Command, cfg: &RunConfig) -> String {
    let echo =
        serde_json::to_string(&json!({ "command": command, "config": cfg })).unwrap_or_default();
    format!("# schema_version={SCHEMA_VERSION} {echo}")
}

/// Formats an optional number for a CSV cell.
pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{}", round_sig(v)),
        _ => String::new(),
    }
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Failure::Input(format!("cannot write output: {e}")))
        }
    }
}

pub fn emit_json(out: Option<&Path>, doc: &Value) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Failure::Input(e.to_string()))?;
    text.push('\n');
    emit(out, &text)
}

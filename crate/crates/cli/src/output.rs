//! Row tables with provenance, written as CSV or JSON.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Format;

pub const TOOL: &str = "relpot";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance columns appended to every CSV row.
pub const PROVENANCE: [&str; 3] = ["seed", "config_hash", "version"];

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

/// A table with fixed columns; cells are numbers, strings or null.
#[derive(Debug)]
pub struct Table {
    pub command: &'static str,
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(command: &'static str, columns: &'static [&'static str]) -> Self {
        Table { command, columns, rows: Vec::new() }
    }

    /// Appends a row given as (column, value) pairs; missing columns are null.
    pub fn push(&mut self, cells: &[(&str, Value)]) {
        let mut row = vec![Value::Null; self.columns.len()];
        for (name, v) in cells {
            let i = self.columns.iter().position(|c| c == name).unwrap_or_else(|| panic!("unknown column {name}"));
            row[i] = v.clone();
        }
        self.rows.push(row);
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => relpot::verify::fmt_f64(x),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// Finite numbers become JSON numbers; NaN and infinities become strings so the output stays valid.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

pub fn opt(x: Option<f64>) -> Value {
    x.map(num).unwrap_or(Value::Null)
}

pub fn text(s: &str) -> Value {
    Value::String(s.to_string())
}

pub fn write_csv<W: Write>(t: &Table, p: &Provenance, out: W) -> Result<(), String> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| format!("csv output failed: {e}");
    w.write_record(t.columns.iter().chain(PROVENANCE.iter())).map_err(err)?;
    let tail = [p.seed.to_string(), p.config_hash.clone(), VERSION.to_string()];
    for row in &t.rows {
        w.write_record(row.iter().map(cell_text).chain(tail.iter().cloned())).map_err(err)?;
    }
    w.flush().map_err(|e| format!("csv output failed: {e}"))
}

pub fn to_json(t: &Table, p: &Provenance) -> Value {
    let rows: Vec<Value> = t
        .rows
        .iter()
        .map(|r| Value::Object(t.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect::<Map<_, _>>()))
        .collect();
    serde_json::json!({
        "tool": TOOL,
        "version": VERSION,
        "seed": p.seed,
        "config_hash": p.config_hash,
        "command": t.command,
        "columns": t.columns,
        "rows": rows,
    })
}

/// Writes to `path`, or standard output when absent.
pub fn emit(t: &Table, p: &Provenance, format: Format, path: Option<&Path>) -> Result<(), String> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => write_csv(t, p, &mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, &to_json(t, p)).map_err(|e| e.to_string())?;
            buf.push(b'\n');
        }
    }
    match path {
        Some(p) => std::fs::write(p, buf).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => std::io::stdout().write_all(&buf).map_err(|e| e.to_string()),
    }
}

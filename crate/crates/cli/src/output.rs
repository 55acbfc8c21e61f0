//! Table emission. CSV files open with a `# {json}` line holding the run
//! configuration, command metadata and library version; JSON files carry the
//! same header next to the rows. Floats use the shortest representation that
//! round-trips, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Float(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(n) => json!(n),
            // non-finite values become null
            Cell::Float(x) => json!(x),
            Cell::Text(s) if s.is_empty() => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}

pub struct Table {
    pub command: &'static str,
    pub meta: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &'static str, meta: Value, columns: &[&'static str]) -> Self {
        Self {
            command,
            meta,
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg: &RunConfig) -> String {
        let header = header(self.command, cfg, &self.meta);
        match cfg.format {
            Format::Csv => {
                let mut s = format!("# {header}\n{}\n", self.columns.join(","));
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(s, "{}", cells.join(","));
                }
                s
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let mut doc = header;
                doc["columns"] = json!(self.columns);
                doc["rows"] = Value::Array(rows);
                pretty(&doc)
            }
        }
    }
}

/// `{"command", "config", "meta", "version"}`.
pub fn header(command: &str, cfg: &RunConfig, meta: &Value) -> Value {
    json!({
        "command": command,
        "config": cfg,
        "meta": meta,
        "version": zeta_kernel::VERSION,
    })
}

pub fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialises");
    s.push('\n');
    s
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(p.display().to_string(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io("stdout".into(), e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunArgs;

    #[test]
    fn csv_uses_round_trip_floats() {
        let cfg = RunConfig::resolve(&RunArgs::default()).unwrap();
        let mut t = Table::new("demo", json!({}), &["n", "x", "flag"]);
        t.push(vec![Cell::from(1usize), Cell::from(0.1 + 0.2), Cell::Text(String::new())]);
        t.push(vec![Cell::from(2usize), Cell::from(1.0), Cell::Text("singular".into())]);
        let s = t.render(&cfg);
        let lines: Vec<&str> = s.lines().collect();
        assert!(lines[0].starts_with("# {"));
        assert_eq!(&lines[1..], ["n,x,flag", "1,0.30000000000000004,", "2,1.0,singular"]);
        let v: Value = serde_json::from_str(&lines[0][2..]).unwrap();
        assert_eq!(v["config"]["theta"], json!(2.0));
        assert_eq!(v["version"], json!(zeta_kernel::VERSION));
    }

    #[test]
    fn json_rows_follow_columns() {
        let cfg = RunConfig {
            format: Format::Json,
            ..RunConfig::resolve(&RunArgs::default()).unwrap()
        };
        let mut t = Table::new("demo", json!({"k": 1}), &["x", "y"]);
        t.push(vec![Cell::from(0.5), Cell::from(f64::NAN)]);
        let v: Value = serde_json::from_str(&t.render(&cfg)).unwrap();
        assert_eq!(v["columns"], json!(["x", "y"]));
        assert_eq!(v["rows"], json!([[0.5, null]]));
        assert_eq!(v["meta"]["k"], json!(1));
    }
}

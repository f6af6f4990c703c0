//! Result documents, number formatting and atomic file output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Number, Value};

use crate::config::{Format, RunConfig};
use crate::error::CliError;

pub const SIGNIFICANT_DIGITS: usize = 15;
pub const OUT_DIR_VAR: &str = "CATENOID_OUT_DIR";

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().expect("formatted float parses")
}

pub fn number(x: f64) -> Value {
    Number::from_f64(round15(x)).map(Value::Number).unwrap_or(Value::Null)
}

/// Rounds every float in `v` to 15 significant digits.
pub fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => number(n.as_f64().expect("f64 number")),
        Value::Array(a) => Value::Array(a.into_iter().map(rounded).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}

pub fn csv_field(x: f64) -> String {
    if x.is_finite() {
        format!("{:e}", round15(x))
    } else {
        "nan".into()
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Number(n) if n.is_f64() => csv_field(n.as_f64().unwrap_or(f64::NAN)),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Null => "nan".into(),
        other => other.to_string(),
    }
}

/// A table: JSON rows or CSV lines with a header.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(csv_cell).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), rounded(v.clone()))).collect()))
                .collect(),
        )
    }
}

/// What a command produces.
pub enum Report {
    /// Top-level fields; floats are rounded unless listed in `exact`.
    Record { fields: BTreeMap<String, Value>, exact: BTreeMap<String, Value> },
    Table { key: &'static str, table: Table, extra: BTreeMap<String, Value> },
}

fn metadata(cfg: &RunConfig) -> Value {
    let mut m = Map::new();
    m.insert("command".into(), Value::String(cfg.command.name().into()));
    m.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    m.insert("seed".into(), Value::from(cfg.seed));
    m.insert("significant_digits".into(), Value::from(SIGNIFICANT_DIGITS));
    m.insert("tolerances".into(), Value::Object(cfg.tolerances.iter().map(|(k, v)| (k.clone(), number(*v))).collect()));
    m.insert("grid".into(), Value::Object(cfg.grid.iter().map(|(k, v)| (k.clone(), Value::from(*v))).collect()));
    if let Some(s) = &cfg.sweep {
        m.insert("sweep".into(), serde_json::json!({ "from": number(s.from), "to": number(s.to), "count": s.count }));
    }
    Value::Object(m)
}

pub fn render(cfg: &RunConfig, report: Report) -> Result<String, CliError> {
    match (cfg.format, report) {
        (Format::Csv, Report::Table { table, .. }) => Ok(table.to_csv()),
        (Format::Csv, Report::Record { fields, .. }) => {
            // One row of the scalar fields.
            let scalars: Vec<(&String, &Value)> = fields.iter().filter(|(_, v)| v.is_number() || v.is_boolean() || v.is_string()).collect();
            let header: Vec<&str> = scalars.iter().map(|(k, _)| k.as_str()).collect();
            let row: Vec<String> = scalars.iter().map(|(_, v)| csv_cell(v)).collect();
            Ok(format!("{}\n{}\n", header.join(","), row.join(",")))
        }
        (Format::Json, report) => {
            let mut doc = Map::new();
            match report {
                Report::Record { fields, exact } => {
                    for (k, v) in fields {
                        doc.insert(k, rounded(v));
                    }
                    for (k, v) in exact {
                        doc.insert(k, v);
                    }
                }
                Report::Table { key, table, extra } => {
                    doc.insert(key.into(), table.to_json());
                    for (k, v) in extra {
                        doc.insert(k, rounded(v));
                    }
                }
            }
            doc.insert("metadata".into(), metadata(cfg));
            let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("document serializes");
            s.push('\n');
            Ok(s)
        }
    }
}

fn destination(cfg: &RunConfig) -> Option<PathBuf> {
    if let Some(p) = &cfg.output_path {
        return Some(p.clone());
    }
    let dir = std::env::var_os(OUT_DIR_VAR).filter(|d| !d.is_empty())?;
    let ext = match cfg.format {
        Format::Json => "json",
        Format::Csv => "csv",
    };
    Some(Path::new(&dir).join(format!("{}.{ext}", cfg.command.name())))
}

/// Writes to a temporary file next to the target, then renames it.
fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match destination(cfg) {
        Some(p) => {
            write_atomic(&p, text)?;
            log::info!("wrote {}", p.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
